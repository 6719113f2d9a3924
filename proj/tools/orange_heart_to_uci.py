#!/usr/bin/env python3
"""Convert Orange's bundled heart_disease.tab into the UCI processed.cleveland layout.

Orange ships the 303 Cleveland records with categorical attributes spelled out
and the diagnosis collapsed to 0 (absence) / 1 (presence). This script restores
the numeric UCI codes for the 13 attributes and keeps the binary label, so the
output is a 14-field comma-separated file with "?" marking missing cells.

Usage: orange_heart_to_uci.py <heart_disease.tab | Orange3 wheel> <out.data>
"""
import sys
import zipfile

CODES = {
    "gender": {"female": "0.0", "male": "1.0"},
    "chest pain": {
        "typical ang": "1.0",
        "atypical ang": "2.0",
        "non-anginal": "3.0",
        "asymptomatic": "4.0",
    },
    "rest ECG": {"normal": "0.0", "ST-T abnormal": "1.0", "left vent hypertrophy": "2.0"},
    "slope peak exc ST": {"upsloping": "1.0", "flat": "2.0", "downsloping": "3.0"},
    "thal": {"normal": "3.0", "fixed defect": "6.0", "reversable defect": "7.0"},
}


def read_tab(path):
    if path.endswith(".whl"):
        with zipfile.ZipFile(path) as z:
            return z.read("Orange/datasets/heart_disease.tab").decode()
    with open(path, encoding="utf-8") as f:
        return f.read()


def fmt_number(text):
    if text in ("", "?"):
        return "?"
    return f"{float(text):.1f}"


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    lines = read_tab(sys.argv[1]).splitlines()
    header = lines[0].split("\t")
    out = []
    for line in lines[3:]:
        if not line.strip():
            continue
        cells = line.split("\t")
        fields = []
        for name, cell in zip(header[:-1], cells[:-1]):
            if cell in ("", "?"):
                fields.append("?")
            elif name in CODES:
                fields.append(CODES[name][cell])
            else:
                fields.append(fmt_number(cell))
        fields.append(str(int(cells[-1])))
        out.append(",".join(fields))
    with open(sys.argv[2], "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(out) + "\n")
    print(f"wrote {len(out)} records to {sys.argv[2]}")


if __name__ == "__main__":
    main()
