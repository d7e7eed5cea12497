"""Smoke test for the Python bindings.

Build the extension first, then run with the module on the path:

    cargo build -p thicklam-py --features extension-module --release
    cp target/release/libthicklam_py.so python/thicklam_py.so
    python3 python/smoke_test.py
"""

import json
import os
import subprocess
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import thicklam_py as tl  # noqa: E402


def main():
    farey = tl.Backend("farey")
    assert farey.distance("0/1", "1/0") == (1, 1)
    assert farey.distance("1/0", "13/8")[0] == len(farey.geodesic("1/0", "13/8")) - 1
    assert tl.Backend.from_json(farey.to_json()).distance("2/5", "3/7") == farey.distance("2/5", "3/7")

    tree = tl.Backend("tree")
    assert tree.distance("ab", "aB") == (2, 2)
    assert tree.product("abab", "abba") == 2.0
    assert tree.hyperbolicity(sample=12)["delta"] == "0"

    split = tl.split_sequence("13/8")
    assert split["word"] == "RLRLRC"
    assert [str(d) for d in split["digits"]] == split["euclid"]

    session = tl.MarkovSession(points=9, seed=7)
    a = session.sample(length=12, seed=3)
    b = session.sample(length=12, seed=3)
    assert a == b and a["certificate"]["is_l_backtracking"]

    v = tl.find_vertical(plant="1/3")
    assert v["s_star"] == "1/3" and v["connection"]["hol"]["x"] == "0"

    report = tl.verify_slit_expansion(samples=5, t_max="1")
    assert report["pass"], report

    try:
        tl.Backend("farey").distance("x/0", "1/0")
    except tl.ThicklamError:
        pass
    else:
        raise AssertionError("bad slope accepted")

    cli = os.environ.get("THICKLAM_BIN")
    if cli:
        out = subprocess.run(
            [cli, "flatsurf", "findvertical", "--cert", "/dev/stdout"],
            capture_output=True, text=True, check=True,
        ).stdout
        cert = out[out.index('{\n  "manifest"'):]
        assert tl.replay(cert)["pass"]
        bad = json.loads(cert)
        bad["pass"] = not bad["pass"]
        try:
            tl.replay(json.dumps(bad))
        except tl.IntegrityError:
            pass
        else:
            raise AssertionError("tampered certificate replayed")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
