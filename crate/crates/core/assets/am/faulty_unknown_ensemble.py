

def resolve(state):
    plan = reference_plan(state)
    if state["villagers"]:
        first = state["villagers"][0]["id"]
        remove(plan, first)
        add(plan, "Defend", first)
    return plan
