"""Which frequencies can a CAFE encoding express?

With integer base frequencies the product of N affine maps is a
trigonometric polynomial whose frequencies are signed sums of at most N base
frequencies. We enumerate that set, expand a random model symbolically, and
compare with the DFT of the sampled encoding.
"""

import numpy as np

from cafe import encodings as enc
from cafe.model import ModelSpec, init_model
from cafe.spectrum import (empirical_spectrum_dft, enumerate_cafe_frequencies,
                           expand_cafe_symbolically, format_freqs)

base, N = [1, 3], 3
spectrum = enumerate_cafe_frequencies(base, N)
print(f"base {base}, N={N}: {format_freqs(spectrum.frequencies)}")

basis = enc.explicit_basis(np.array(base, dtype=float)[:, None])
model = init_model(ModelSpec(encoder="cafe", D=1, M=len(base), J=0, N=N, D_h=4, seed=1), basis)

# exact coefficients of the first output coordinate
poly = expand_cafe_symbolically(model)[0]
for (w,), (s, c) in sorted(poly.terms.items()):
    print(f"  freq {w:2d}: {s:+.4f} sin  {c:+.4f} cos")

dft = empirical_spectrum_dft(model, 64)
print(f"DFT bins over all coordinates: {sorted(dft.union)}")
print("contained in the oracle set:", dft.contained)
