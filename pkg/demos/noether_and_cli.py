"""Gauged symmetries behind first integrals, then the same run via the CLI."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from kinetic_integrals.canonical import inverse_noether
from kinetic_integrals.pipeline import builtin_spec
from kinetic_integrals.systems import damped_oscillator, damped_oscillator_integrals, parse_fi, whittaker


def show(label, I, dyn):
    names = dyn.geometry.coords
    for sym in inverse_noether(I, dyn):
        js = sym.to_json(names)
        print(f"{label} [{js['variant']}] eta={js['eta']} f={js['f']} residual zero: {js['residual_zero']}")


def main():
    w = whittaker()
    show("ydot - x", parse_fi("ydot - x", w), w)
    d = damped_oscillator(1, 2, 3)
    show("exp_a", parse_fi(damped_oscillator_integrals(1, 2, 3)["exp_a"], d), d)

    with tempfile.TemporaryDirectory() as tmp:
        spec = Path(tmp) / "damped.json"
        spec.write_text(json.dumps(builtin_spec("damped-oscillator"), indent=2))
        print("\n$ kinetic-integrals run damped.json --text", flush=True)
        subprocess.run([sys.executable, "-m", "kinetic_integrals", "run", str(spec), "--text"], check=False)


if __name__ == "__main__":
    main()
