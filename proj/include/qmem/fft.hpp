#pragma once

#include "qmem/grid.hpp"

namespace qmem {

// Transform pair used throughout:
//   F(w) = integral f(t) e^{+i w t} dt
//   f(t) = (1/2pi) integral F(w) e^{-i w t} dw
// Grids must have even length; the frequency grid is centered on zero.

ComplexSpectrum spectrum_from_time(const FieldWaveform& f);
FieldWaveform time_from_spectrum(const ComplexSpectrum& s, double t_center = 0.0);

}  // namespace qmem
