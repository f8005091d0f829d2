

def resolve(state):
    plan = reference_plan(state)
    if state["villagers"]:
        first = state["villagers"][0]["id"]
        add(plan, "Farm" if first in plan["Attack"] else "Attack", first)
    return plan
