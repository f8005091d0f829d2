

def resolve(state):
    return [v["id"] for v in state["villagers"]]
