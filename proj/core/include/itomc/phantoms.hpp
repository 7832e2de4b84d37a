#pragma once
// Test conductivities.

#include "itomc/grid_fem.hpp"

namespace itomc {

/// Modified Shepp-Logan head phantom on [0,1]^2, shifted to values in [1, 2].
ConductivityField shepp_logan(int nx, int ny);
/// Raw phantom intensity at (x, y) in [0,1]^2 (values in [0, 1]).
double shepp_logan_intensity(double x, double y);

/// Unit background with two discs of value `contrast`.
ConductivityField two_blob(int nx, int ny, double contrast = 2.0);

/// 1 + 0.5 exp(-|x - c|^2 / 0.05) centred at (0.5, 0.5).
double smooth_bump(double x, double y);

} // namespace itomc
