"""Fit the bundled 128x128 image with CAFE+ and a parameter-matched RFF MLP.

Both use the desk protocol (4096-sample batches, 2000 steps). Takes about
a minute and a half on one core; reconstructions are written as PGM files.
"""

import sys
from pathlib import Path

from cafe.experiments import component_variants, desk_config, fit
from cafe.io import ImageGrid, save_ppm

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
variants = component_variants(desk_config())

for name in ("neither", "cafeplus"):
    result = fit(variants[name])
    rep = result.report
    print(f"{name:9s} {rep.params:6d} params  PSNR {rep.metric:.2f} dB  ({result.wall:.0f} s)")
    save_ppm(ImageGrid(result.prediction().reshape(result.task.shape)), out / f"{name}.pgm")
print(f"reconstructions in {out}/")
