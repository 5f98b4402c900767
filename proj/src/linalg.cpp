#include "vlstm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vlstm/rng.hpp"

namespace vlstm::linalg {

using nd::Tensor;

QrResult householder_qr(const Tensor& a) {
    const int m = a.rows(), n = a.cols();
    if (m < n) throw std::invalid_argument("householder_qr: need rows >= cols");

    Tensor r = a;  // will be reduced in place
    // accumulate reflectors to apply to identity later
    std::vector<std::vector<double>> vs;
    vs.reserve(n);

    for (int k = 0; k < n; ++k) {
        double norm = 0.0;
        for (int i = k; i < m; ++i) norm += r.at(i, k) * r.at(i, k);
        norm = std::sqrt(norm);
        std::vector<double> v(m, 0.0);
        if (norm > 0.0) {
            double alpha = r.at(k, k) >= 0.0 ? -norm : norm;
            for (int i = k; i < m; ++i) v[i] = r.at(i, k);
            v[k] -= alpha;
            double vnorm2 = 0.0;
            for (int i = k; i < m; ++i) vnorm2 += v[i] * v[i];
            if (vnorm2 > 0.0) {
                for (int j = k; j < n; ++j) {
                    double dot = 0.0;
                    for (int i = k; i < m; ++i) dot += v[i] * r.at(i, j);
                    double f = 2.0 * dot / vnorm2;
                    for (int i = k; i < m; ++i) r.at(i, j) -= f * v[i];
                }
            }
        }
        vs.push_back(std::move(v));
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I
    Tensor q(m, n);
    for (int j = 0; j < n; ++j) q.at(j, j) = 1.0;
    for (int k = n - 1; k >= 0; --k) {
        const std::vector<double>& v = vs[k];
        double vnorm2 = 0.0;
        for (int i = k; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int i = k; i < m; ++i) dot += v[i] * q.at(i, j);
            double f = 2.0 * dot / vnorm2;
            for (int i = k; i < m; ++i) q.at(i, j) -= f * v[i];
        }
    }

    // fix signs so diag(R) >= 0
    for (int k = 0; k < n; ++k) {
        if (r.at(k, k) < 0.0) {
            for (int j = k; j < n; ++j) r.at(k, j) = -r.at(k, j);
            for (int i = 0; i < m; ++i) q.at(i, k) = -q.at(i, k);
        }
    }

    // zero the strictly lower part of R (holds reflector debris)
    Tensor rr(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) rr.at(i, j) = r.at(i, j);
    return {std::move(q), std::move(rr)};
}

Tensor random_orthogonal(int n, uint64_t seed) {
    rng::Stream stream(seed);
    Tensor g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.at(i, j) = stream.gaussian();
    return householder_qr(g).q;
}

std::vector<double> solve_least_squares(const Tensor& a, const std::vector<double>& b) {
    const int m = a.rows(), n = a.cols();
    if (static_cast<int>(b.size()) != m)
        throw std::invalid_argument("solve_least_squares: rhs length mismatch");
    QrResult qr = householder_qr(a);

    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        double d = std::abs(qr.r.at(k, k));
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
    }
    if (dmin <= dmax * 1e-12 || dmax == 0.0)
        throw std::runtime_error(
            "solve_least_squares: rank-deficient design (diag ratio " +
            std::to_string(dmax == 0.0 ? 0.0 : dmin / dmax) + ")");

    // y = Q^T b, then back-substitute R x = y
    std::vector<double> y(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += qr.q.at(i, j) * b[i];
        y[j] = acc;
    }
    std::vector<double> x(n, 0.0);
    for (int j = n - 1; j >= 0; --j) {
        double acc = y[j];
        for (int k = j + 1; k < n; ++k) acc -= qr.r.at(j, k) * x[k];
        x[j] = acc / qr.r.at(j, j);
    }
    return x;
}

std::vector<double> nnls(const Tensor& a, const std::vector<double>& b) {
    const int m = a.rows(), n = a.cols();
    if (static_cast<int>(b.size()) != m) throw std::invalid_argument("nnls: rhs length mismatch");

    std::vector<bool> passive(n, false);
    std::vector<bool> excluded(n, false);  // columns that made the passive set singular
    std::vector<double> x(n, 0.0);

    auto residual = [&]() {
        std::vector<double> r(m);
        for (int i = 0; i < m; ++i) {
            double acc = b[i];
            for (int j = 0; j < n; ++j) acc -= a.at(i, j) * x[j];
            r[i] = acc;
        }
        return r;
    };
    auto solve_passive = [&](std::vector<double>& z) {
        std::vector<int> cols;
        for (int j = 0; j < n; ++j)
            if (passive[j]) cols.push_back(j);
        if (cols.empty()) return;
        Tensor sub(m, static_cast<int>(cols.size()));
        for (int i = 0; i < m; ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) sub.at(i, static_cast<int>(j)) = a.at(i, cols[j]);
        std::vector<double> zs = solve_least_squares(sub, b);
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t j = 0; j < cols.size(); ++j) z[cols[j]] = zs[j];
    };

    const double tol = 1e-12;
    for (int outer = 0; outer < 3 * n + 30; ++outer) {
        std::vector<double> r = residual();
        // gradient of 0.5||Ax-b||^2 is -A^T r; pick most positive A^T r among active
        int best = -1;
        double best_w = tol;
        for (int j = 0; j < n; ++j) {
            if (passive[j] || excluded[j]) continue;
            double w = 0.0;
            for (int i = 0; i < m; ++i) w += a.at(i, j) * r[i];
            if (w > best_w) {
                best_w = w;
                best = j;
            }
        }
        if (best < 0) break;
        passive[best] = true;

        std::vector<double> z(n, 0.0);
        try {
            solve_passive(z);
        } catch (const std::runtime_error&) {
            passive[best] = false;
            excluded[best] = true;
            continue;
        }
        int inner_guard = 0;
        while (true) {
            double zmin = 0.0;
            bool ok = true;
            for (int j = 0; j < n; ++j)
                if (passive[j] && z[j] <= tol) ok = false;
            if (ok) break;
            // step toward z until the first passive coordinate hits zero
            double alpha = 1.0;
            for (int j = 0; j < n; ++j) {
                if (!passive[j] || z[j] > tol) continue;
                double denom = x[j] - z[j];
                if (denom > 0.0) alpha = std::min(alpha, x[j] / denom);
            }
            for (int j = 0; j < n; ++j)
                if (passive[j]) x[j] += alpha * (z[j] - x[j]);
            for (int j = 0; j < n; ++j)
                if (passive[j] && x[j] <= tol) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            solve_passive(z);
            (void)zmin;
            if (++inner_guard > n + 10) break;
        }
        for (int j = 0; j < n; ++j) x[j] = passive[j] ? std::max(z[j], 0.0) : 0.0;
    }
    return x;
}

}  // namespace vlstm::linalg
