# Adaptation manager for the Dragon Hunt scenario.
# Reads one JSON request per line on stdin, answers one JSON line on stdout.
import json
import sys

SPAWN_COST = @SPAWN_COST@
DAMAGE = {"Farmer": @DMG_FARMER@, "Warrior": @DMG_WARRIOR@}


def empty_plan(state):
    return {name: [] for name in state["ensembles"]}


def add(plan, ensemble, vid):
    plan.setdefault(ensemble, []).append(vid)


def remove(plan, vid):
    for members in plan.values():
        if vid in members:
            members.remove(vid)


def reference_plan(state, attack=True):
    plan = empty_plan(state)
    villagers = state["villagers"]
    cave = [v for v in villagers if v["location"] == "Cave"]
    cave_damage = sum(DAMAGE[v["role"]] for v in cave) if attack else 0
    for v in cave:
        add(plan, "Attack" if attack else "GoToCave", v["id"])

    warriors = [v for v in villagers if v["location"] == "Village" and v["role"] == "Warrior"]
    farmers = [v for v in villagers if v["location"] == "Village" and v["role"] == "Farmer"]
    # warriors leave in pairs, or alone to join fighters already in the cave
    send = (len(warriors) >= 2 or (len(cave) > 0 and len(warriors) > 0)) and state["dragon_hp"] > cave_damage
    for w in warriors:
        add(plan, "GoToCave" if send else "Farm", w["id"])

    spawn = state["wheat"] >= 2 * SPAWN_COST and len(farmers) >= 2
    for i, f in enumerate(farmers):
        add(plan, "SpawnWarrior" if spawn and i < 2 else "Farm", f["id"])
    return plan
