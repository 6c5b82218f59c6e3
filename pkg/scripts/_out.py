import csv
import sys
from contextlib import contextmanager


@contextmanager
def csv_out(path, header):
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        yield w
    finally:
        if path:
            fh.close()
