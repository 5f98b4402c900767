#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "vlstm/cells.hpp"
#include "vlstm/rng.hpp"

using namespace vlstm::cells;
using vlstm::nd::NamedTensors;
using vlstm::nd::Tensor;

namespace {

Tensor random_tensor(int rows, int cols, vlstm::rng::Stream& stream, double scale = 0.8) {
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = scale * stream.gaussian();
    return t;
}

NamedTensors random_params(const CellConfig& cfg, uint64_t seed, double scale = 0.8) {
    NamedTensors p = init_cell_params(cfg, seed);
    vlstm::rng::Stream stream(vlstm::rng::derive(seed, "randomize"));
    for (auto& [name, t] : p)
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = scale * stream.gaussian();
    return p;
}

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Straight-line reimplementation of the four LSTM equations, written
// against the parameter tensors directly. Kept independent of the graph
// engine on purpose.
struct LstmRef {
    const CellConfig& cfg;
    const NamedTensors& p;

    double pre(const char* w, const char* u, const char* b, const Tensor& x, const Tensor& h,
               int row, int j) const {
        double acc = 0.0;
        const Tensor& W = p.at(w);
        for (int i = 0; i < cfg.n_x; ++i) acc += W.at(j, i) * x.at(row, i);
        const Tensor& U = p.at(u);
        for (int i = 0; i < cfg.n_h; ++i) acc += U.at(j, i) * h.at(row, i);
        if (cfg.bias == BiasMode::On) acc += p.at(b).at(0, j);
        return acc;
    }

    void step(const Tensor& x, Tensor& h, Tensor& c) const {
        Tensor h_new(h.rows(), h.cols());
        Tensor c_new(c.rows(), c.cols());
        for (int r = 0; r < x.rows(); ++r)
            for (int j = 0; j < cfg.n_h; ++j) {
                const double i_g = sigmoid_ref(pre("w_i", "u_i", "b_i", x, h, r, j));
                const double f_g = sigmoid_ref(pre("w_f", "u_f", "b_f", x, h, r, j));
                const double o_g = sigmoid_ref(pre("w_o", "u_o", "b_o", x, h, r, j));
                const double cand = std::tanh(pre("w_c", "u_c", "b_c", x, h, r, j));
                c_new.at(r, j) = f_g * c.at(r, j) + i_g * cand;
                h_new.at(r, j) = o_g * std::tanh(c_new.at(r, j));
            }
        h = h_new;
        c = c_new;
    }
};

// Same for the multi-timescale GRU recursion.
struct MsGruRef {
    const CellConfig& cfg;
    const NamedTensors& p;

    std::vector<double> mix_weights(int j) const {
        if (cfg.n_scales == 1) return {1.0};
        const Tensor& m = p.at("mix_w");
        double mx = m.at(0, j);
        for (int k = 1; k < cfg.n_scales; ++k) mx = std::max(mx, m.at(k, j));
        double denom = 0.0;
        std::vector<double> w(cfg.n_scales);
        for (int k = 0; k < cfg.n_scales; ++k) {
            w[k] = std::exp(m.at(k, j) - mx);
            denom += w[k];
        }
        for (double& v : w) v /= denom;
        return w;
    }

    Tensor mixed(const std::vector<Tensor>& c) const {
        Tensor out(c[0].rows(), c[0].cols());
        for (int r = 0; r < out.rows(); ++r)
            for (int j = 0; j < out.cols(); ++j) {
                std::vector<double> w = mix_weights(j);
                double acc = 0.0;
                for (int k = 0; k < cfg.n_scales; ++k) acc += w[k] * c[k].at(r, j);
                out.at(r, j) = acc;
            }
        return out;
    }

    void step(const Tensor& x, std::vector<Tensor>& c) const {
        const Tensor prev_mix = mixed(c);
        const int B = x.rows();
        // reset gate first (it feeds every candidate element)
        Tensor reset(B, cfg.n_h);
        for (int r = 0; r < B; ++r)
            for (int j = 0; j < cfg.n_h; ++j) {
                double r_pre = 0.0;
                for (int i = 0; i < cfg.n_x; ++i) r_pre += p.at("w_r").at(j, i) * x.at(r, i);
                for (int i = 0; i < cfg.n_h; ++i) r_pre += p.at("u_r").at(j, i) * prev_mix.at(r, i);
                if (cfg.bias == BiasMode::On) r_pre += p.at("b_r").at(0, j);
                reset.at(r, j) = sigmoid_ref(r_pre);
            }
        std::vector<Tensor> c_out(cfg.n_scales, Tensor(B, cfg.n_h));
        for (int r = 0; r < B; ++r)
            for (int j = 0; j < cfg.n_h; ++j) {
                double cand_pre = 0.0;
                for (int i = 0; i < cfg.n_x; ++i) cand_pre += p.at("w_c").at(j, i) * x.at(r, i);
                for (int i = 0; i < cfg.n_h; ++i)
                    cand_pre += p.at("u_c").at(j, i) * (prev_mix.at(r, i) * reset.at(r, i));
                if (cfg.bias == BiasMode::On) cand_pre += p.at("b_c").at(0, j);
                const double cand = std::tanh(cand_pre);
                for (int k = 0; k < cfg.n_scales; ++k) {
                    const std::string s = "." + std::to_string(k);
                    double lam_pre = 0.0;
                    for (int i = 0; i < cfg.n_x; ++i)
                        lam_pre += p.at("w_l" + s).at(j, i) * x.at(r, i);
                    for (int i = 0; i < cfg.n_h; ++i)
                        lam_pre += p.at("u_l" + s).at(j, i) * c[k].at(r, i);
                    if (cfg.bias == BiasMode::On) lam_pre += p.at("b_l" + s).at(0, j);
                    const double lam = sigmoid_ref(lam_pre);
                    c_out[k].at(r, j) = c[k].at(r, j) * (1.0 - lam) + lam * cand;
                }
            }
        c = c_out;
    }
};

}  // namespace

TEST_CASE("init_cell_params determinism and structure") {
    CellConfig cfg;
    cfg.arch = Arch::Vlstm;
    cfg.n_x = 1;
    cfg.n_h = 3;
    cfg.n_scales = 2;

    SUBCASE("same seed twice gives identical parameters") {
        NamedTensors a = init_cell_params(cfg, 42);
        NamedTensors b = init_cell_params(cfg, 42);
        REQUIRE(a.size() == b.size());
        for (auto& [name, t] : a) CHECK(t == b.at(name));
    }
    SUBCASE("bias off removes bias tensors") {
        cfg.bias = BiasMode::Off;
        NamedTensors p = init_cell_params(cfg, 1);
        for (const auto& [name, t] : p) CHECK(name.rfind("b_", 0) != 0);
    }
    SUBCASE("mixing pre-activation starts at alpha = 0.5") {
        NamedTensors p = init_cell_params(cfg, 9);
        const Tensor& a = p.at("mix_a");
        for (std::size_t i = 0; i < a.numel(); ++i) {
            CHECK(a[i] == 0.0);
            CHECK(sigmoid_ref(a[i]) == 0.5);
        }
    }
    SUBCASE("forget-gate bias starts at one") {
        NamedTensors p = init_cell_params(cfg, 3);
        for (int k = 0; k < 2; ++k) {
            const Tensor& b = p.at("b_f." + std::to_string(k));
            for (std::size_t i = 0; i < b.numel(); ++i) CHECK(b[i] == 1.0);
        }
    }
    SUBCASE("recurrent blocks are orthogonal") {
        cfg.n_h = 4;
        NamedTensors p = init_cell_params(cfg, 17);
        const Tensor& u = p.at("u_c");
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double dot = 0.0;
                for (int r = 0; r < 4; ++r) dot += u.at(r, i) * u.at(r, j);
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
            }
    }
}

TEST_CASE("param_count") {
    SUBCASE("LSTM, N_x=1, N_h=2, bias on: 4 gates of (2 + 4 + 2)") {
        CellConfig cfg;
        cfg.arch = Arch::Lstm;
        cfg.n_x = 1;
        cfg.n_h = 2;
        CHECK(param_count(init_cell_params(cfg, 0)) == 32);
    }
    SUBCASE("VLSTM n=2 tied, N_x=1, N_h=2, bias on: 4 blocks + mixing") {
        CellConfig cfg;
        cfg.arch = Arch::Vlstm;
        cfg.n_x = 1;
        cfg.n_h = 2;
        cfg.n_scales = 2;
        cfg.coupling = GateCoupling::Tied;
        CHECK(param_count(init_cell_params(cfg, 0)) == 34);
    }
    SUBCASE("VLSTM n=1 independent matches the LSTM count") {
        CellConfig cfg;
        cfg.arch = Arch::Vlstm;
        cfg.n_x = 1;
        cfg.n_h = 2;
        cfg.n_scales = 1;
        CHECK(param_count(init_cell_params(cfg, 0)) == 32);
    }
}

TEST_CASE("lstm_step") {
    CellConfig cfg;
    cfg.arch = Arch::Lstm;
    cfg.n_x = 2;
    cfg.n_h = 3;

    SUBCASE("all-zero parameters, c_prev = 1") {
        NamedTensors p = init_cell_params(cfg, 0);
        for (auto& [name, t] : p) t.zero();
        Tensor x(1, 2), h(1, 3), c(1, 3);
        c.fill(1.0);
        LstmStepResult out = lstm_step(cfg, p, x, h, c);
        for (int j = 0; j < 3; ++j) {
            CHECK(out.c.at(0, j) == doctest::Approx(0.5).epsilon(1e-15));
            CHECK(out.h.at(0, j) == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-12));
        }
        CHECK(out.h.at(0, 0) == doctest::Approx(0.23105857863000487).epsilon(1e-12));
    }
    SUBCASE("saturated forget gate preserves the cell") {
        NamedTensors p = init_cell_params(cfg, 0);
        for (auto& [name, t] : p) t.zero();
        p.at("b_f").fill(40.0);    // f -> 1
        p.at("b_i").fill(-40.0);   // i -> 0
        vlstm::rng::Stream stream(1);
        Tensor x = random_tensor(2, 2, stream);
        Tensor h(2, 3);
        Tensor c = random_tensor(2, 3, stream);
        LstmStepResult out = lstm_step(cfg, p, x, h, c);
        CHECK(vlstm::nd::max_abs_diff(out.c, c) <= 1e-12);
    }
    SUBCASE("three steps match the straight-line reference recursion") {
        NamedTensors p = random_params(cfg, 1234);
        LstmRef ref{cfg, p};
        vlstm::rng::Stream stream(77);
        Tensor h_ref(2, 3), c_ref(2, 3), h(2, 3), c(2, 3);
        for (int t = 0; t < 3; ++t) {
            Tensor x = random_tensor(2, 2, stream);
            ref.step(x, h_ref, c_ref);
            LstmStepResult out = lstm_step(cfg, p, x, h, c);
            h = out.h;
            c = out.c;
        }
        CHECK(vlstm::nd::max_abs_diff(h, h_ref) <= 1e-12);
        CHECK(vlstm::nd::max_abs_diff(c, c_ref) <= 1e-12);
    }
}

TEST_CASE("vlstm_step") {
    CellConfig lstm_cfg;
    lstm_cfg.arch = Arch::Lstm;
    lstm_cfg.n_x = 1;
    lstm_cfg.n_h = 3;

    CellConfig cfg;
    cfg.arch = Arch::Vlstm;
    cfg.n_x = 1;
    cfg.n_h = 3;

    SUBCASE("n=1 is bit-identical to the LSTM") {
        cfg.n_scales = 1;
        for (uint64_t seed = 0; seed < 100; ++seed) {
            NamedTensors vp = random_params(cfg, seed);
            // the LSTM blocks carry the same names minus the scale suffix
            NamedTensors lp;
            for (const auto& [name, t] : vp) {
                std::string base = name;
                if (auto pos = base.rfind(".0"); pos != std::string::npos && pos == base.size() - 2)
                    base = base.substr(0, pos);
                lp[base] = t;
            }
            vlstm::rng::Stream stream(vlstm::rng::derive(seed, "inputs"));
            Tensor x = random_tensor(2, 1, stream);
            Tensor h = random_tensor(2, 3, stream, 0.3);
            Tensor c = random_tensor(2, 3, stream, 0.3);
            VlstmStepResult v = vlstm_step(cfg, vp, x, h, {c});
            LstmStepResult l = lstm_step(lstm_cfg, lp, x, h, c);
            CHECK(v.h == l.h);
            CHECK(v.c_scales[0] == l.c);
        }
    }
    SUBCASE("alpha -> 1 makes the output depend on scale 1 only") {
        cfg.n_scales = 2;
        NamedTensors p = random_params(cfg, 5);
        p.at("mix_a").fill(60.0);  // sigmoid saturates to 1
        vlstm::rng::Stream stream(6);
        Tensor x = random_tensor(1, 1, stream);
        Tensor h = random_tensor(1, 3, stream, 0.3);
        Tensor c0 = random_tensor(1, 3, stream);
        Tensor c1a = random_tensor(1, 3, stream);
        Tensor c1b = random_tensor(1, 3, stream);  // different second-scale state
        VlstmStepResult a = vlstm_step(cfg, p, x, h, {c0, c1a});
        VlstmStepResult b = vlstm_step(cfg, p, x, h, {c0, c1b});
        CHECK(vlstm::nd::max_abs_diff(a.h, b.h) <= 1e-14);
        CHECK(vlstm::nd::max_abs_diff(a.c_mixed, a.c_scales[0]) <= 1e-12);
    }
    SUBCASE("identical per-scale parameters collapse the mixture") {
        cfg.n_scales = 2;
        NamedTensors p = random_params(cfg, 8);
        for (const char* blk : {"w_f", "u_f", "b_f", "w_i", "u_i", "b_i"})
            p.at(std::string(blk) + ".1") = p.at(std::string(blk) + ".0");
        vlstm::rng::Stream stream(9);
        Tensor x = random_tensor(2, 1, stream);
        Tensor h = random_tensor(2, 3, stream, 0.3);
        Tensor c = random_tensor(2, 3, stream);
        VlstmStepResult out = vlstm_step(cfg, p, x, h, {c, c});
        CHECK(vlstm::nd::max_abs_diff(out.c_mixed, out.c_scales[0]) <= 1e-14);
        CHECK(vlstm::nd::max_abs_diff(out.c_scales[0], out.c_scales[1]) <= 1e-14);
    }
    SUBCASE("tied coupling: i + f = 1 exactly") {
        // i is computed as scalar_mix(f, -1, 1); for any sigmoid output
        // f in [0, 1] the identity (1 - f) + f rounds to exactly 1.0.
        // Check the exact-path property on the primitive the tied gate
        // uses, across the full gate range.
        vlstm::nd::Graph g;
        auto f_in = g.input("f", 1, 1);
        g.mark_output("i", g.scalar_mix(f_in, -1.0, 1.0));
        vlstm::rng::Stream stream(12);
        for (int trial = 0; trial < 10000; ++trial) {
            const double z = 100.0 * (stream.uniform01() - 0.5);  // covers both saturations
            const double f = sigmoid_ref(z);
            const double i = g.evaluate({{"f", Tensor::scalar(f)}}).at("i")[0];
            CHECK(i + f == 1.0);
        }
        // and the tied cell carries the constraint end to end: with
        // c_prev = cand-free zeros the update is (1-f)*cand, with ones it
        // is f + (1-f)*cand; the reconstructed gates lie in (0,1)
        cfg.n_scales = 2;
        cfg.coupling = GateCoupling::Tied;
        NamedTensors p = random_params(cfg, 11);
        Tensor x = random_tensor(1, 1, stream);
        Tensor h = random_tensor(1, 3, stream, 0.3);
        Tensor zeros(1, 3), ones(1, 3);
        ones.fill(1.0);
        VlstmStepResult at0 = vlstm_step(cfg, p, x, h, {zeros, zeros});
        VlstmStepResult at1 = vlstm_step(cfg, p, x, h, {ones, ones});
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 3; ++j) {
                const double f = at1.c_scales[k].at(0, j) - at0.c_scales[k].at(0, j);
                CHECK(f > 0.0);
                CHECK(f < 1.0);
            }
    }
    SUBCASE("mixing is a convex combination") {
        for (int n : {2, 3, 4}) {
            cfg.n_scales = n;
            NamedTensors p = random_params(cfg, 100 + n);
            vlstm::rng::Stream stream(200 + n);
            Tensor x = random_tensor(2, 1, stream);
            Tensor h = random_tensor(2, 3, stream, 0.3);
            std::vector<Tensor> c;
            for (int k = 0; k < n; ++k) c.push_back(random_tensor(2, 3, stream));
            VlstmStepResult out = vlstm_step(cfg, p, x, h, c);
            for (int r = 0; r < 2; ++r)
                for (int j = 0; j < 3; ++j) {
                    double lo = out.c_scales[0].at(r, j), hi = lo;
                    for (int k = 1; k < n; ++k) {
                        lo = std::min(lo, out.c_scales[k].at(r, j));
                        hi = std::max(hi, out.c_scales[k].at(r, j));
                    }
                    CHECK(out.c_mixed.at(r, j) >= lo - 1e-12);
                    CHECK(out.c_mixed.at(r, j) <= hi + 1e-12);
                }
        }
    }
    SUBCASE("scale permutation with matching parameter swap leaves h unchanged") {
        // n = 2: swap the scales and negate the mixing pre-activation
        cfg.n_scales = 2;
        NamedTensors p = random_params(cfg, 31);
        NamedTensors q = p;
        for (const char* blk : {"w_f", "u_f", "b_f", "w_i", "u_i", "b_i"}) {
            std::swap(q.at(std::string(blk) + ".0"), q.at(std::string(blk) + ".1"));
        }
        for (std::size_t i = 0; i < q.at("mix_a").numel(); ++i) q.at("mix_a")[i] *= -1.0;
        vlstm::rng::Stream stream(32);
        Tensor x = random_tensor(2, 1, stream);
        Tensor h = random_tensor(2, 3, stream, 0.3);
        Tensor c0 = random_tensor(2, 3, stream);
        Tensor c1 = random_tensor(2, 3, stream);
        VlstmStepResult a = vlstm_step(cfg, p, x, h, {c0, c1});
        VlstmStepResult b = vlstm_step(cfg, q, x, h, {c1, c0});
        CHECK(vlstm::nd::max_abs_diff(a.h, b.h) <= 1e-12);

        // n = 3: permute the scales together with the softmax rows
        cfg.n_scales = 3;
        NamedTensors p3 = random_params(cfg, 33);
        NamedTensors q3 = p3;
        const int perm[3] = {2, 0, 1};
        for (const char* blk : {"w_f", "u_f", "b_f", "w_i", "u_i", "b_i"})
            for (int k = 0; k < 3; ++k)
                q3.at(std::string(blk) + "." + std::to_string(k)) =
                    p3.at(std::string(blk) + "." + std::to_string(perm[k]));
        Tensor& mix_q = q3.at("mix_a");
        const Tensor& mix_p = p3.at("mix_a");
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j) mix_q.at(k, j) = mix_p.at(perm[k], j);
        std::vector<Tensor> c3;
        for (int k = 0; k < 3; ++k) c3.push_back(random_tensor(2, 3, stream));
        VlstmStepResult a3 = vlstm_step(cfg, p3, x, h, c3);
        VlstmStepResult b3 = vlstm_step(cfg, q3, x, h, {c3[perm[0]], c3[perm[1]], c3[perm[2]]});
        CHECK(vlstm::nd::max_abs_diff(a3.h, b3.h) <= 1e-12);
    }
    SUBCASE("wrong number of scale states fails") {
        cfg.n_scales = 2;
        NamedTensors p = init_cell_params(cfg, 0);
        Tensor x(1, 1), h(1, 3), c(1, 3);
        CHECK_THROWS(vlstm_step(cfg, p, x, h, {c}));
    }
}

TEST_CASE("msgru_step") {
    CellConfig cfg;
    cfg.arch = Arch::MsGru;
    cfg.n_x = 2;
    cfg.n_h = 3;

    SUBCASE("n=1 matches the plain GRU recursion") {
        cfg.n_scales = 1;
        NamedTensors p = random_params(cfg, 51);
        MsGruRef ref{cfg, p};
        vlstm::rng::Stream stream(52);
        std::vector<Tensor> c_ref{Tensor(2, 3)};
        std::vector<Tensor> c{Tensor(2, 3)};
        for (int t = 0; t < 4; ++t) {
            Tensor x = random_tensor(2, 2, stream);
            ref.step(x, c_ref);
            MsGruStepResult out = msgru_step(cfg, p, x, c);
            c = out.c_scales;
        }
        CHECK(vlstm::nd::max_abs_diff(c[0], c_ref[0]) <= 1e-12);
    }
    SUBCASE("saturated-small lambda freezes every scale") {
        cfg.n_scales = 2;
        NamedTensors p = random_params(cfg, 53);
        for (int k = 0; k < 2; ++k) {
            const std::string s = "." + std::to_string(k);
            p.at("w_l" + s).zero();
            p.at("u_l" + s).zero();
            p.at("b_l" + s).fill(-40.0);  // lambda ~ 4e-18
        }
        vlstm::rng::Stream stream(54);
        Tensor x = random_tensor(2, 2, stream);
        std::vector<Tensor> c{random_tensor(2, 3, stream), random_tensor(2, 3, stream)};
        MsGruStepResult out = msgru_step(cfg, p, x, c);
        CHECK(vlstm::nd::max_abs_diff(out.c_scales[0], c[0]) <= 1e-15);
        CHECK(vlstm::nd::max_abs_diff(out.c_scales[1], c[1]) <= 1e-15);
    }
    SUBCASE("random parameters match the reference recursion") {
        cfg.n_scales = 3;
        NamedTensors p = random_params(cfg, 55);
        MsGruRef ref{cfg, p};
        vlstm::rng::Stream stream(56);
        std::vector<Tensor> c_ref(3, Tensor(2, 3));
        std::vector<Tensor> c(3, Tensor(2, 3));
        for (int t = 0; t < 4; ++t) {
            Tensor x = random_tensor(2, 2, stream);
            ref.step(x, c_ref);
            MsGruStepResult out = msgru_step(cfg, p, x, c);
            c = out.c_scales;
        }
        for (int k = 0; k < 3; ++k) CHECK(vlstm::nd::max_abs_diff(c[k], c_ref[k]) <= 1e-12);
    }
}

TEST_CASE("cell states stay bounded by max(1, |c0|)") {
    // With tied gates c_t = f c_{t-1} + (1-f) cand is a convex blend of
    // the previous state and a tanh value, so |c_t| <= max(|c_{t-1}|, 1)
    // for any parameters. (Independent gates only satisfy the per-step
    // inequality |c_t| <= f |c_{t-1}| + i, which can drift past 1, so
    // the universal claim is checked on the tied cell and the
    // standard-initialization cell.)
    SUBCASE("tied VLSTM, arbitrary parameters") {
        CellConfig cfg;
        cfg.arch = Arch::Vlstm;
        cfg.n_x = 1;
        cfg.n_h = 2;
        cfg.n_scales = 2;
        cfg.coupling = GateCoupling::Tied;
        NamedTensors p = random_params(cfg, 61, 2.0);
        vlstm::rng::Stream stream(62);
        Tensor h(3, 2);
        std::vector<Tensor> c(cfg.scales(), Tensor(3, 2));
        for (int t = 0; t < 100; ++t) {
            Tensor x = random_tensor(3, 1, stream, 2.0);
            VlstmStepResult out = vlstm_step(cfg, p, x, h, c);
            h = out.h;
            c = out.c_scales;
            for (const Tensor& ck : c)
                for (std::size_t i = 0; i < ck.numel(); ++i) CHECK(std::abs(ck[i]) <= 1.0 + 1e-12);
        }
    }
    SUBCASE("LSTM with independent gates stays near the drift ceiling") {
        // Independent gates obey |c_t| <= f |c_{t-1}| + i, whose fixed
        // point i/(1-f) can pass 1 (here f is biased toward 1), so the
        // check is against that ceiling rather than against 1.
        CellConfig cfg;
        cfg.arch = Arch::Lstm;
        cfg.n_x = 1;
        cfg.n_h = 2;
        NamedTensors p = init_cell_params(cfg, 63);
        vlstm::rng::Stream stream(64);
        Tensor h(3, 2), c(3, 2);
        for (int t = 0; t < 100; ++t) {
            Tensor x = random_tensor(3, 1, stream);
            LstmStepResult out = lstm_step(cfg, p, x, h, c);
            h = out.h;
            c = out.c;
            for (std::size_t i = 0; i < c.numel(); ++i) CHECK(std::abs(c[i]) <= 4.0);
        }
    }
}
