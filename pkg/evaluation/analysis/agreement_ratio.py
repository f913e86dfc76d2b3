"""
Calculate agreement ratios between stability and criticality verdicts
"""
import json
import argparse
from itertools import combinations
from typing import Any, Dict, List, Tuple


def record_key(item: Dict[str, Any]) -> Tuple:
    """Parameter tuple identifying one judged configuration"""
    params = item.get("params", {})
    return tuple(round(float(params.get(name, 0.0)), 12)
                 for name in ("a", "b", "gamma", "capacity", "tau1", "tau2", "kappa"))


def load_judgements(file_path: str) -> Dict[Tuple, Dict[str, Any]]:
    """Load judge output - use the parameter tuple as key"""
    with open(file_path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return {record_key(item): item for item in data}


def merge_judgements(tables: List[Dict[Tuple, Dict[str, Any]]]) -> Dict[Tuple, Dict[str, Any]]:
    """Records present in every table, with their fields merged"""
    if not tables:
        return {}
    common = set(tables[0])
    for table in tables[1:]:
        common &= set(table)
    merged = {}
    for key in common:
        record: Dict[str, Any] = {}
        for table in tables:
            record.update(table[key])
        merged[key] = record
    return merged


def calculate_agreement_ratio(*verdicts: List[Any]) -> float:
    """Fraction of items on which every verdict list agrees"""
    if not verdicts:
        return 0.0
    lengths = {len(v) for v in verdicts}
    if len(lengths) != 1:
        print(f"[WARNING] Verdict list lengths differ: {sorted(lengths)}")
        return 0.0
    total = lengths.pop()
    if total == 0:
        return 0.0
    agreements = sum(1 for row in zip(*verdicts) if len(set(row)) == 1)
    return agreements / total


def calculate_pairwise_agreement(verdicts1: List[Any], verdicts2: List[Any]) -> float:
    """Calculate pairwise agreement between two verdict lists"""
    if len(verdicts1) != len(verdicts2) or not verdicts1:
        return 0.0
    agreements = sum(1 for x, y in zip(verdicts1, verdicts2) if x == y)
    return agreements / len(verdicts1)


def disagreements(records: Dict[Tuple, Dict[str, Any]], fields: List[str]) -> List[Dict[str, Any]]:
    return [record for record in records.values()
            if len({record.get(name) for name in fields}) > 1]


def main():
    parser = argparse.ArgumentParser(description="Calculate agreement ratios between verdicts")
    parser.add_argument("--files", nargs="+", required=True,
                        help="Judge output files (JSON)")
    parser.add_argument("--fields", nargs="+", default=["theorem_stable", "oracle_stable"],
                        help="Verdict fields to compare")
    parser.add_argument("--show", type=int, default=5,
                        help="Disagreeing records to print")

    args = parser.parse_args()
    if len(args.fields) < 2:
        print("[ERROR] Need at least two verdict fields")
        return

    tables = []
    for file_path in args.files:
        try:
            table = load_judgements(file_path)
            print(f"[INFO] {file_path} loaded: {len(table)} records")
            tables.append(table)
        except (OSError, json.JSONDecodeError) as e:
            print(f"[ERROR] Failed to load {file_path} - {e}")
            return

    records = merge_judgements(tables)
    print(f"\n[INFO] Common parameter sets: {len(records)}")
    if not records:
        print("[ERROR] No common parameter sets found.")
        return

    missing = [name for name in args.fields
               if any(name not in record for record in records.values())]
    if missing:
        print(f"[ERROR] Fields missing from some records: {', '.join(missing)}")
        return

    keys = sorted(records)
    verdicts = {name: [records[key][name] for key in keys] for name in args.fields}

    print("\n" + "=" * 80)
    print("Verdict Agreement Analysis Results")
    print("=" * 80)

    overall = calculate_agreement_ratio(*verdicts.values())
    print(f"{len(args.fields)}-way Agreement Ratio: {overall:.4f} ({overall * 100:.2f}%)")

    pairwise = {}
    for first, second in combinations(args.fields, 2):
        pair_name = f"{first}-{second}"
        pairwise[pair_name] = calculate_pairwise_agreement(verdicts[first], verdicts[second])
        print(f"{pair_name} Agreement: {pairwise[pair_name]:.4f} "
              f"({pairwise[pair_name] * 100:.2f}%)")

    conflicts = disagreements(records, args.fields)
    if conflicts:
        print(f"\n[WARNING] {len(conflicts)} disagreeing parameter sets")
        for record in conflicts[:args.show]:
            print(f"  {record.get('params')} -> "
                  + ", ".join(f"{name}={record[name]}" for name in args.fields))

    print("\n" + "=" * 80)
    print("\nSummary:")
    print(f"Analyzed parameter sets: {len(records)}")
    print(f"Compared verdicts: {len(args.fields)} ({', '.join(args.fields)})")
    print("=" * 80)


if __name__ == "__main__":
    main()
