#include "qclearn/reconstruct.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>

#include "qclearn/errors.hpp"

namespace qclearn {

namespace {

double snap_to(double v, std::initializer_list<double> candidates) {
    double best = v;
    double best_dist = std::numeric_limits<double>::infinity();
    for (double c : candidates) {
        const double d = std::abs(v - c);
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

TwoOutcomeResult reconstruct(const std::vector<double>& z_raw, const ZzProvider& zz_provider,
                             const ReconstructOptions& options) {
    const int n = static_cast<int>(z_raw.size());
    if (n == 0) throw InconsistentInput("no expectation values given");

    std::vector<double> z = z_raw;
    if (options.snap) {
        double delta = z[0];
        for (double v : z)
            if (std::abs(v) < std::abs(delta)) delta = v;
        for (double& v : z) v = snap_to(v, {1.0, -1.0, delta, -delta});
    }

    TwoOutcomeResult res;
    res.a.bits.assign(n, 0);
    res.b.bits.assign(n, 0);
    res.p_a = 1.0;
    int first_interior = -1;
    double z_first = 0.0;

    for (int i = 0; i < n; ++i) {
        const double v = z[i];
        if (std::abs(v - 1.0) <= options.tol) {  // case i
            res.a.bits[i] = res.b.bits[i] = 0;
        } else if (std::abs(v + 1.0) <= options.tol) {  // case ii
            res.a.bits[i] = res.b.bits[i] = 1;
        } else if (std::abs(v) < 1.0) {
            if (first_interior < 0) {  // case iii
                res.a.bits[i] = 1;
                res.b.bits[i] = 0;
                res.p_a = (1.0 - v) / 2.0;
                first_interior = i;
                z_first = v;
            } else if (std::abs(z_first) > options.tol) {  // case iv, p(a) != p(b)
                if (std::abs(v - z_first) <= options.tol) {
                    res.a.bits[i] = res.a.bits[first_interior];
                    res.b.bits[i] = res.b.bits[first_interior];
                } else if (std::abs(v + z_first) <= options.tol) {
                    res.a.bits[i] = 1 - res.a.bits[first_interior];
                    res.b.bits[i] = 1 - res.b.bits[first_interior];
                } else {
                    throw InconsistentInput("interior <Z> matches neither +/-<Z_j>");
                }
            } else {  // case iv, p(a) = p(b) = 1/2
                if (std::abs(v) > options.tol)
                    throw InconsistentInput("equal-probability support requires <Z_i> = 0");
                double zz = zz_provider(i, first_interior);
                if (options.snap) zz = snap_to(zz, {1.0, -1.0});
                if (std::abs(zz - 1.0) <= options.tol) {
                    res.a.bits[i] = res.a.bits[first_interior];
                    res.b.bits[i] = res.b.bits[first_interior];
                } else if (std::abs(zz + 1.0) <= options.tol) {
                    res.a.bits[i] = 1 - res.a.bits[first_interior];
                    res.b.bits[i] = 1 - res.b.bits[first_interior];
                } else {
                    throw InconsistentInput("<Z_i Z_j> must be +/-1 for a two-outcome state");
                }
            }
        } else {
            throw InconsistentInput("expectation value outside [-1, 1]");
        }
    }
    return res;
}

std::vector<double> forward_expectations(const BitString& a, const BitString& b, double p_a) {
    if (a.size() != b.size()) throw LengthMismatch("bit strings differ in length");
    if (p_a < 0.0 || p_a > 1.0) throw InconsistentInput("p_a must lie in [0, 1]");
    std::vector<double> z(a.size());
    for (int i = 0; i < a.size(); ++i)
        z[i] = p_a * (1.0 - 2.0 * a.bits[i]) + (1.0 - p_a) * (1.0 - 2.0 * b.bits[i]);
    return z;
}

double forward_zz(const BitString& a, const BitString& b, double p_a, int i, int j) {
    if (a.size() != b.size()) throw LengthMismatch("bit strings differ in length");
    if (i < 0 || i >= a.size() || j < 0 || j >= a.size())
        throw IndexOutOfRange("ZZ index out of range");
    const double za = (1.0 - 2.0 * a.bits[i]) * (1.0 - 2.0 * a.bits[j]);
    const double zb = (1.0 - 2.0 * b.bits[i]) * (1.0 - 2.0 * b.bits[j]);
    return p_a * za + (1.0 - p_a) * zb;
}

BitString decode_bv(const std::vector<double>& z_pred, double threshold) {
    BitString w;
    w.bits.reserve(z_pred.size());
    for (double z : z_pred) w.bits.push_back(z > threshold ? 1 : 0);
    return w;
}

}  // namespace qclearn
