#include "trad/error.hpp"
#include "trad/evalkit.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <numeric>

namespace trad::evalkit {

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    const double n = static_cast<double>(xs.size());
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / (n - 1.0));
    return out;
}

TTest t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t_test needs at least two values per sample");
    const auto sa = mean_std(a), sb = mean_std(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double va = sa.std * sa.std / na, vb = sb.std * sb.std / nb;
    const double diff = sa.mean - sb.mean;

    TTest r;
    if (va + vb == 0.0) {
        r.degenerate = true;
        if (diff == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
            r.p = 0.0;
        }
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    boost::math::students_t dist(r.df);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    return r;
}

}  // namespace trad::evalkit
