"""Regenerate src/cafe/data/desk128.pgm from scikit-image's "camera" photo.

The 512x512 photo is averaged over 4x4 blocks to 128x128 and quantised to
8 bits. Only needed to rebuild the bundled file; the package does not import
scikit-image.
"""

from pathlib import Path

import numpy as np
from skimage import data

img = data.camera().astype(np.float64) / 255.0
small = img.reshape(128, 4, 128, 4).mean(axis=(1, 3))
q = np.floor(small * 255.0 + 0.5).astype(np.uint8)
out = Path(__file__).resolve().parents[1] / "src" / "cafe" / "data" / "desk128.pgm"
out.write_bytes(b"P5\n128 128\n255\n" + q.tobytes())
print(f"wrote {out}")
