"""CLI invocations with frozen outputs under tests/golden.

Run ``python3 tests/golden_cases.py --write`` to refresh the files after an
intentional output change.
"""
import contextlib
import io
import sys
from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"

CASES = {
    "parse_carpet": ["parse", "--group", "builtin:sierpinski_carpet"],
    "nucleus_odometer": ["nucleus", "--group", "builtin:odometer"],
    "nucleus_mating": ["nucleus", "--group", "builtin:shishikura_tan_mating"],
    "activity_grigorchuk": ["activity", "--group", "builtin:grigorchuk", "--self-replicating"],
    "schreier_odometer_3": ["schreier", "--group", "builtin:odometer", "--level", "3"],
    "schreier_img_stats": ["schreier", "--group", "builtin:img_z2_minus_1_16z2", "--level", "4", "--stats"],
    "tiles_odometer_3": ["tiles", "--group", "builtin:odometer", "--level", "3"],
    "sscomplex_odometer_csv": ["sscomplex", "--group", "builtin:odometer", "--level", "2", "--format", "csv"],
    "capacity_odometer": ["capacity", "--group", "builtin:odometer", "--level", "4", "--A", "list:0",
                          "--B", "list:1", "--mc", "2000"],
    "capacity_scan_basilica": ["capacity", "--group", "builtin:basilica", "--scan", "3:6"],
    "eta_odometer": ["eta", "--group", "builtin:odometer", "--p", "1,2", "--level", "4", "--radius", "64"],
    "thurston_carpet": ["thurston", "--group", "builtin:sierpinski_carpet", "--basis", "a*c,c*a",
                        "--scan", "1:2.5"],
    "thurston_mating": ["thurston", "--group", "builtin:shishikura_tan_mating", "--p", "1,2"],
    "walk_basilica": ["walk", "--group", "builtin:basilica", "--t", "256", "--trials", "8"],
    "walk_orbit_nonliouville": ["walk", "--group", "builtin:nonliouville_fragmented", "--orbit", "(0)",
                                "--t", "500", "--trials", "100"],
    "traverses_carpet": ["traverses", "--group", "builtin:sierpinski_carpet", "--level", "2",
                         "--tiles", "00,01", "--t", "64", "--trials", "4"],
    "report_basilica": ["report", "--group", "builtin:basilica", "--cap-levels", "3:5", "--t", "128",
                        "--trials", "4", "--traverse-t", "64"],
    "registry_show_basilica": ["registry", "show", "basilica"],
}


def run(argv) -> tuple[int, str]:
    from selfsim.cli import main
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(list(argv))
    return code, buf.getvalue()


if __name__ == "__main__" and "--write" in sys.argv:
    GOLDEN.mkdir(exist_ok=True)
    for name, argv in CASES.items():
        code, out = run(argv)
        assert code == 0, (name, code)
        (GOLDEN / f"{name}.out").write_text(out)
        print(f"wrote {name}")
