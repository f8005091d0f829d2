

def resolve(state):
    plan = reference_plan(state)
    if state["villagers"]:
        remove(plan, state["villagers"][-1]["id"])
    return plan
