#!/usr/bin/env python3
"""Populate data/heart and data/spam from the KEEL copies bundled in the keel_ds wheel.

The UCI archive is not always reachable, so the files are rebuilt in their
original UCI layouts:

  heart/heart.dat        Statlog (Heart), space-delimited, class 1=absence 2=presence.
                         KEEL stores oldpeak (column 10) multiplied by 10; it is divided back.
  spam/spambase.data     Spambase, comma-delimited, last column 1=spam.

Waveform is synthetic and is produced by `wdne gen-waveform` instead.

Usage: python3 scripts/fetch_data.py [DATA_DIR]
"""
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

KEEL_WHEEL = "keel_ds==0.2.5"


def keel_rows(wheel, name):
    text = wheel.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("@"):
            yield [c.strip() for c in line.split(",")]


def fmt(v):
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(round(f, 6))


def main():
    data_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps", "-q", KEEL_WHEEL, "-d", tmp])
        wheel = zipfile.ZipFile(glob.glob(os.path.join(tmp, "keel_ds-*.whl"))[0])

        with open(os.path.join(data_dir, "heart", "heart.dat"), "w") as out:
            for row in keel_rows(wheel, "heart"):
                vals = [float(v) for v in row[:-1]]
                vals[9] /= 10.0
                out.write(" ".join(fmt(v) for v in vals) + " " + row[-1] + "\n")

        with open(os.path.join(data_dir, "spam", "spambase.data"), "w") as out:
            for row in keel_rows(wheel, "spambase"):
                out.write(",".join(fmt(v) for v in row[:-1]) + "," + row[-1] + "\n")


if __name__ == "__main__":
    main()
