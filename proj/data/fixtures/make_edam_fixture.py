"""Writes edam_layout.bin from edam_layout.json with the struct module."""
import json
import pathlib
import struct

here = pathlib.Path(__file__).parent
layout = json.loads((here / "edam_layout.json").read_text(encoding="utf-8"))
dim = layout["dim"]
out = bytearray(b"EDAM")
out += struct.pack("<III", 1, len(layout["rows"]), dim)
for row in layout["rows"]:
    surface = row["surface"].encode("utf-8")
    assert len(row["vector"]) == dim
    out += struct.pack("<H", len(surface)) + surface
    out += struct.pack("<%df" % dim, *row["vector"])
(here / "edam_layout.bin").write_bytes(bytes(out))
