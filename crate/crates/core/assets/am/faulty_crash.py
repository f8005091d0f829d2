

def resolve(state):
    warriors = state["warriors"]
    return {"Farm": [w["id"] for w in warriors]}
