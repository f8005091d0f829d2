

def resolve(state):
    return reference_plan(state)
