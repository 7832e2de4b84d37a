#include "itomc/phantoms.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace itomc {

namespace {
// intensity, semi-axes, centre, rotation in degrees; coordinates on [-1,1]^2
struct Ellipse {
    double value, a, b, x0, y0, phi;
};
constexpr std::array<Ellipse, 10> kShepp{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
}};
} // namespace

double shepp_logan_intensity(double x, double y) {
    const double X = 2 * x - 1, Y = 2 * y - 1;
    double v = 0;
    for (const auto &e : kShepp) {
        const double t = e.phi * std::numbers::pi / 180.0;
        const double xr = (X - e.x0) * std::cos(t) + (Y - e.y0) * std::sin(t);
        const double yr = -(X - e.x0) * std::sin(t) + (Y - e.y0) * std::cos(t);
        if ((xr / e.a) * (xr / e.a) + (yr / e.b) * (yr / e.b) <= 1.0) v += e.value;
    }
    return v;
}

ConductivityField shepp_logan(int nx, int ny) {
    return ConductivityField::sample(nx, ny, [](double x, double y) { return 1.0 + shepp_logan_intensity(x, y); });
}

ConductivityField two_blob(int nx, int ny, double contrast) {
    return ConductivityField::sample(nx, ny, [contrast](double x, double y) {
        const auto in = [&](double cx, double cy) {
            return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= 0.15 * 0.15;
        };
        return (in(0.3, 0.6) || in(0.7, 0.4)) ? contrast : 1.0;
    });
}

double smooth_bump(double x, double y) {
    const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
    return 1.0 + 0.5 * std::exp(-r2 / 0.05);
}

} // namespace itomc
