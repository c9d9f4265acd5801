#!/usr/bin/env python3
"""Rebuild the CSV files under data/ from locally available copies of the UCI sets.

Sources:
  wine   -- scikit-learn's bundled copy (sklearn/datasets/data/wine_data.csv)
  heart  -- Cleveland heart disease, from the Orange 2.7.8 source tarball
            (Orange/datasets/heart_disease.tab), recoded with the UCI integer codes.
            The six rows with a missing 'ca' or 'thal' are dropped so the file is
            complete and can be used with the missingness injectors.

Usage:
  python3 tools/prepare_datasets.py --orange-sdist Orange-2.7.8.tar.gz --out data/
"""

import argparse
import csv
import os
import tarfile

WINE_FEATURES = [
    "alcohol", "malic_acid", "ash", "alcalinity_of_ash", "magnesium", "total_phenols",
    "flavanoids", "nonflavanoid_phenols", "proanthocyanins", "color_intensity", "hue",
    "od280_od315", "proline",
]

HEART_CODES = {
    "gender": {"female": "0", "male": "1"},
    "chest pain": {"typical ang": "1", "atypical ang": "2", "non-anginal": "3", "asymptomatic": "4"},
    "rest ECG": {"normal": "0", "ST-T abnormal": "1", "left vent hypertrophy": "2"},
    "slope peak exc ST": {"upsloping": "1", "flat": "2", "downsloping": "3"},
    "thal": {"normal": "3", "fixed defect": "6", "reversable defect": "7"},
}


def write_wine(out_dir):
    import sklearn

    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "wine_data.csv")
    with open(src) as f:
        rows = list(csv.reader(f))[1:]
    with open(os.path.join(out_dir, "wine.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(WINE_FEATURES + ["class"])
        for r in rows:
            w.writerow(r[:-1] + ["class_" + r[-1]])
    return len(rows)


def write_heart(sdist, out_dir):
    with tarfile.open(sdist) as t:
        member = next(m for m in t.getmembers() if m.name.endswith("Orange/datasets/heart_disease.tab"))
        lines = t.extractfile(member).read().decode("utf-8").splitlines()
    header = lines[0].split("\t")
    names = [h.replace(" ", "_").replace(">", "gt") for h in header]
    kept = 0
    with open(os.path.join(out_dir, "heart.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names[:-1] + ["class"])
        for line in lines[3:]:
            cells = line.split("\t")
            if "?" in cells:
                continue
            out = [HEART_CODES.get(h, {}).get(c, c) for h, c in zip(header, cells)]
            w.writerow(out)
            kept += 1
    return kept


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--orange-sdist", required=True)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    print("wine rows:", write_wine(args.out))
    print("heart rows:", write_heart(args.orange_sdist, args.out))


if __name__ == "__main__":
    main()
