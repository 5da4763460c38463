"""Rebuild KEEL `.dat` fixtures from the data rows shipped in the keel-ds wheel.

The wheel stores the KEEL data sections without their header block, so the
`@relation/@attribute/@inputs/@outputs/@data` header is regenerated here.
Multiclass glass is reassembled from KEEL's one-vs-rest glass0..glass6 files,
which share the same row order.

usage: python3 make_keel_fixtures.py <keel_ds wheel> <output dir>
"""
import sys
import zipfile
from pathlib import Path

BALANCED = [
    "iris", "wine", "wdbc", "wisconsin", "sonar", "heart", "pima", "ionosphere",
    "hayes-roth", "tae", "monk-2", "led7digit", "vehicle", "bands",
    "mammographic", "vowel", "segment", "movement_libras", "banana", "phoneme",
    "marketing",
]

IRIS = ["SepalLength", "SepalWidth", "PetalLength", "PetalWidth"]
WINE = ["Alcohol", "MalicAcid", "Ash", "AlcalinityOfAsh", "Magnesium",
        "TotalPhenols", "Flavanoids", "NonflavanoidsPhenols", "Proanthocyanins",
        "ColorIntensity", "Hue", "OD280_OD315", "Proline"]
GLASS = ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"]
NAMES = {"iris": IRIS, "wine": WINE, "glass": GLASS}


def split_rows(text):
    rows = []
    for line in text.strip().splitlines():
        line = line.strip()
        if line:
            rows.append([c.strip() for c in line.split(",")])
    return rows


def is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def header(relation, rows):
    n_cols = len(rows[0])
    names = NAMES.get(relation, [f"a{i + 1}" for i in range(n_cols - 1)]) + ["Class"]
    lines = [f"@relation {relation}"]
    for j, name in enumerate(names):
        col = [r[j] for r in rows]
        if j == n_cols - 1 or not all(is_number(c) for c in col):
            values = list(dict.fromkeys(col))
            lines.append(f"@attribute {name} {{{', '.join(values)}}}")
        else:
            vals = [float(c) for c in col]
            kind = "integer" if all(v.is_integer() for v in vals) and all("." not in c and "e" not in c.lower() for c in col) else "real"
            lo, hi = min(vals), max(vals)
            fmt = (lambda v: str(int(v))) if kind == "integer" else repr
            lines.append(f"@attribute {name} {kind} [{fmt(lo)}, {fmt(hi)}]")
    lines.append(f"@inputs {', '.join(names[:-1])}")
    lines.append(f"@outputs {names[-1]}")
    lines.append("@data")
    return lines


def write(out, relation, rows):
    lines = header(relation, rows) + [", ".join(r) for r in rows]
    (out / f"{relation}.dat").write_text("\n".join(lines) + "\n")


def glass_rows(z):
    parts = {}
    for name, label in [("glass0", "1"), ("glass1", "2"), ("glass4", "5"),
                        ("glass5", "6"), ("glass6", "7")]:
        parts[label] = split_rows(z.read(f"keel_ds/data/imbalanced/raw/{name}.dat").decode())
    # glass2 (class 3 vs rest) uses a different row order and rounding, so
    # class 3 is recovered as the rows that are negative in every other file.
    base = parts["1"]
    rows = []
    for i, r in enumerate(base):
        labels = [lab for lab, p in parts.items() if p[i][-1] == "positive"]
        assert len(labels) <= 1, (i, labels)
        rows.append(r[:-1] + (labels or ["3"]))
    return rows


def main():
    wheel, out = sys.argv[1], Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    z = zipfile.ZipFile(wheel)
    for name in BALANCED:
        rows = split_rows(z.read(f"keel_ds/data/balanced/raw/{name}.dat").decode())
        write(out, name.replace("_", "-"), rows)
    write(out, "glass", glass_rows(z))


if __name__ == "__main__":
    main()
