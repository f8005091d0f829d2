

def resolve(state):
    plan = empty_plan(state)
    for v in state["villagers"]:
        add(plan, "Farm", v["id"])
    return plan
