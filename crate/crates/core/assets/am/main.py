

def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        plan = resolve(request["state"])
        print(json.dumps({"type": "assignment", "ensembles": plan}), flush=True)


if __name__ == "__main__":
    main()
