#include "ecgnet/neural.hpp"
#include "ecgnet/errors.hpp"
#include "ecgnet/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ecgnet;

namespace {

const std::vector<TopologyKind> kAllKinds = {
    TopologyKind::feedforward, TopologyKind::fit, TopologyKind::pattern,
    TopologyKind::cascade};

Batch random_batch(const Topology& topo, std::size_t rows, std::uint64_t seed) {
    CounterRng rng(seed);
    Batch b;
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> x(topo.input_dim), t(topo.output_dim, 0.0);
        for (auto& v : x) v = rng.next_double(-2, 2);
        t[rng.next_below(static_cast<std::uint64_t>(topo.output_dim))] = 1.0;
        b.inputs.push_back(std::move(x));
        b.targets.push_back(std::move(t));
    }
    return b;
}

double grad_max_rel_err(const Mlp& net, const Batch& batch) {
    const auto [loss, grad] = loss_and_gradient(net, batch);
    (void)loss;
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        Mlp plus = net, minus = net;
        plus.params[i] += h;
        minus.params[i] -= h;
        const double fd = (loss_and_gradient(plus, batch).first -
                           loss_and_gradient(minus, batch).first) /
                          (2 * h);
        const double denom = std::max({std::fabs(grad[i]), std::fabs(fd), 1e-8});
        worst = std::max(worst, std::fabs(grad[i] - fd) / denom);
    }
    return worst;
}

Batch blob_batch_2class(std::size_t rows, std::uint64_t seed) {
    CounterRng rng(seed);
    Batch b;
    for (std::size_t r = 0; r < rows; ++r) {
        const int cls = static_cast<int>(r % 2);
        std::vector<double> x(kFeatureCount), t(2, 0.0);
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            x[j] = (cls == 0 ? 1.0 : -1.0) * (j % 4 == 0 ? 2.0 : 0.3) +
                   0.4 * rng.next_gaussian();
        t[cls] = 1.0;
        b.inputs.push_back(std::move(x));
        b.targets.push_back(std::move(t));
    }
    return b;
}

} // namespace

TEST_CASE("init_network: determinism, seed sensitivity, fan-in bound") {
    Topology t;
    t.input_dim = 16;
    t.hidden = {4};
    t.output_dim = 2;

    const Mlp a = init_network(t, 7);
    const Mlp b = init_network(t, 7);
    CHECK(a.params == b.params); // bitwise

    const Mlp c = init_network(t, 8);
    CHECK(a.params != c.params);

    // first layer fan_in = 16: |w| <= 0.25; biases exactly zero
    const std::size_t w0 = 16 * 4;
    for (std::size_t i = 0; i < w0; ++i) CHECK(std::fabs(a.params[i]) <= 0.25);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.params[w0 + i] == 0.0);
}

TEST_CASE("forward: zero-weight outputs per kind") {
    Topology t;
    t.input_dim = 15;
    t.hidden = {7};
    t.output_dim = 2;

    SUBCASE("pattern gives the uniform softmax") {
        t.kind = TopologyKind::pattern;
        Mlp net = init_network(t, 1);
        std::fill(net.params.begin(), net.params.end(), 0.0);
        const auto y = forward(net, std::vector<double>(15, 0.3));
        CHECK(y[0] == doctest::Approx(0.5));
        CHECK(y[1] == doctest::Approx(0.5));
    }
    SUBCASE("fit gives zeros") {
        t.kind = TopologyKind::fit;
        Mlp net = init_network(t, 1);
        std::fill(net.params.begin(), net.params.end(), 0.0);
        for (double v : forward(net, std::vector<double>(15, 0.3)))
            CHECK(v == doctest::Approx(0.0));
    }
}

TEST_CASE("forward: cascade skip is a linear pass-through when hidden is dead") {
    Topology t;
    t.kind = TopologyKind::cascade;
    t.input_dim = 3;
    t.hidden = {2};
    t.output_dim = 3;
    Mlp net = init_network(t, 1);
    std::fill(net.params.begin(), net.params.end(), 0.0);

    // layout: W0 (2x3), b0 (2), W1 (3x2), S1 (3x3), b1 (3)
    const std::size_t s1_off = 2 * 3 + 2 + 3 * 2;
    net.params[s1_off + 0 * 3 + 0] = 1.0; // identity skip
    net.params[s1_off + 1 * 3 + 1] = 1.0;
    net.params[s1_off + 2 * 3 + 2] = 1.0;

    const std::vector<double> x = {0.4, -1.1, 2.5};
    const auto y = forward(net, x);
    REQUIRE(y.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("forward: dimension mismatch") {
    Topology t;
    Mlp net = init_network(t, 1);
    CHECK_THROWS_AS(forward(net, std::vector<double>(3, 0.0)), DataError);
}

TEST_CASE("loss: perfect predictions") {
    SUBCASE("cross entropy under 1e-6 at saturation") {
        Topology t;
        t.kind = TopologyKind::pattern;
        t.input_dim = 2;
        t.hidden = {};
        t.output_dim = 2;
        Mlp net = init_network(t, 1);
        std::fill(net.params.begin(), net.params.end(), 0.0);
        net.params[2 * 2 + 0] = 40.0; // bias pushes softmax to ~1 on class 0
        Batch b;
        b.inputs.push_back({0.0, 0.0});
        b.targets.push_back({1.0, 0.0});
        CHECK(loss_and_gradient(net, b).first <= 1e-6);
    }
    SUBCASE("MSE exactly zero") {
        Topology t;
        t.kind = TopologyKind::fit;
        t.input_dim = 2;
        t.hidden = {};
        t.output_dim = 2;
        Mlp net = init_network(t, 1);
        std::fill(net.params.begin(), net.params.end(), 0.0);
        net.params[2 * 2 + 0] = 1.0; // bias = target
        Batch b;
        b.inputs.push_back({0.0, 0.0});
        b.targets.push_back({1.0, 0.0});
        CHECK(loss_and_gradient(net, b).first == 0.0);
    }
}

TEST_CASE("loss: duplicating the batch leaves loss and gradient unchanged") {
    for (TopologyKind kind : kAllKinds) {
        Topology t;
        t.kind = kind;
        t.input_dim = 5;
        t.hidden = {4};
        t.output_dim = 3;
        const Mlp net = init_network(t, 3);
        const Batch b = random_batch(t, 7, 11);
        Batch doubled;
        for (std::size_t i = 0; i < b.size(); ++i) {
            doubled.inputs.push_back(b.inputs[i]);
            doubled.targets.push_back(b.targets[i]);
            doubled.inputs.push_back(b.inputs[i]);
            doubled.targets.push_back(b.targets[i]);
        }
        const auto [l1, g1] = loss_and_gradient(net, b);
        const auto [l2, g2] = loss_and_gradient(net, doubled);
        CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
        for (std::size_t i = 0; i < g1.size(); ++i)
            CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-10));
    }
    Mlp net = init_network(Topology{}, 1);
    CHECK_THROWS_AS(loss_and_gradient(net, Batch{}), DataError);
}

TEST_CASE("gradient matches central finite differences (all kinds, property)") {
    CounterRng meta(101);
    for (TopologyKind kind : kAllKinds) {
        for (int rep = 0; rep < 3; ++rep) {
            Topology t;
            t.kind = kind;
            t.input_dim = 3 + static_cast<int>(meta.next_below(4));
            t.hidden = {3 + static_cast<int>(meta.next_below(3)),
                        2 + static_cast<int>(meta.next_below(3))};
            t.output_dim = 2 + static_cast<int>(meta.next_below(3));
            const Mlp net = init_network(t, meta.next_u64());
            const Batch b = random_batch(t, 5, meta.next_u64());
            CHECK(grad_max_rel_err(net, b) < 1e-4);
        }
    }
}

TEST_CASE("softmax outputs: sum to one, open interval (property)") {
    CounterRng meta(55);
    Topology t;
    t.kind = TopologyKind::pattern;
    t.input_dim = 6;
    t.hidden = {5};
    t.output_dim = 4;
    const Mlp net = init_network(t, 3);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> x(6);
        for (auto& v : x) v = meta.next_double(-30, 30);
        const auto y = forward(net, x);
        double sum = 0.0;
        for (double v : y) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            sum += v;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("scg_train: bitwise deterministic under a fixed seed") {
    const Batch b = blob_batch_2class(60, 5);
    ScgParams p;
    p.max_iter = 60;
    Topology t;
    t.kind = TopologyKind::pattern;
    t.output_dim = 2;

    Mlp n1 = init_network(t, 9);
    Mlp n2 = init_network(t, 9);
    scg_train(n1, b, nullptr, p);
    scg_train(n2, b, nullptr, p);
    CHECK(n1.params == n2.params); // bitwise
    CHECK(n1.final_loss == n2.final_loss);
    CHECK(n1.epochs_run == n2.epochs_run);
}

TEST_CASE("scg_train: separable blobs reach 98% within 200 iterations") {
    for (TopologyKind kind : kAllKinds) {
        Topology t;
        t.kind = kind;
        t.output_dim = 2;
        Mlp net = init_network(t, 3);
        const Batch b = blob_batch_2class(200, 5);
        ScgParams p;
        p.max_iter = 200;
        const TrainingHistory hist = scg_train(net, b, nullptr, p);
        CHECK(hist.iterations <= 200);

        std::size_t correct = 0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto y = forward(net, b.inputs[i]);
            const int am = y[0] >= y[1] ? 0 : 1;
            if (b.targets[i][static_cast<std::size_t>(am)] == 1.0) ++correct;
        }
        CHECK(static_cast<double>(correct) / static_cast<double>(b.size()) >= 0.98);

        // successful steps never record an increase
        for (std::size_t i = 1; i < hist.loss.size(); ++i)
            CHECK(hist.loss[i] <= hist.loss[i - 1] + 1e-15);
    }
}

TEST_CASE("scg_train: conjugate descent solves a consistent quadratic") {
    // linear net + MSE on a consistent system: convex quadratic with zero
    // residual at the optimum
    Topology t;
    t.kind = TopologyKind::feedforward;
    t.input_dim = 15;
    t.hidden = {};
    t.output_dim = 5;
    Mlp net = init_network(t, 11);

    CounterRng rng(8);
    std::vector<double> A(5 * 15), c(5);
    for (auto& v : A) v = rng.next_gaussian();
    for (auto& v : c) v = rng.next_gaussian();
    Batch b;
    for (int r = 0; r < 100; ++r) {
        std::vector<double> x(15), tv(5, 0.0);
        for (auto& v : x) v = rng.next_gaussian();
        for (int i = 0; i < 5; ++i) {
            tv[i] = c[i];
            for (int j = 0; j < 15; ++j) tv[i] += A[i * 15 + j] * x[j];
        }
        b.inputs.push_back(std::move(x));
        b.targets.push_back(std::move(tv));
    }

    const std::size_t n_weights = net.params.size();
    ScgParams p;
    p.max_iter = static_cast<int>(3 * n_weights);
    p.goal_loss = 0.0;
    scg_train(net, b, nullptr, p);

    const auto [loss, grad] = loss_and_gradient(net, b);
    (void)loss;
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("scg_train: validation patience stops training") {
    const Batch train = blob_batch_2class(60, 5);
    const Batch val = blob_batch_2class(30, 99);
    Topology t;
    t.kind = TopologyKind::pattern;
    t.output_dim = 2;
    Mlp net = init_network(t, 1);
    ScgParams p;
    p.max_iter = 500;
    p.patience = 5;
    p.goal_loss = 0.0; // force patience (or max_iter) to be the stopper
    const TrainingHistory hist = scg_train(net, train, &val, p);
    CHECK(!hist.val_loss.empty());
    if (hist.stop_reason == "patience") CHECK(hist.iterations < 500);
}

TEST_CASE("scg_train: non-finite loss aborts with the iteration in the message") {
    Topology t;
    t.kind = TopologyKind::fit;
    t.output_dim = 2;
    Mlp net = init_network(t, 1);
    for (double& v : net.params) v = 1e200; // forces inf immediately
    const Batch b = blob_batch_2class(10, 5);
    ScgParams p;
    CHECK_THROWS_WITH_AS(scg_train(net, b, nullptr, p),
                         doctest::Contains("iteration"), DataError);
}

TEST_CASE("split_70_30: class arithmetic and determinism") {
    const std::vector<std::string> names = ClassSet::default_set().names;

    SUBCASE("10 rows of one class go 7/3") {
        std::vector<FeatureVector> rows(10);
        const FeatureMatrix m = build_matrix(rows, std::vector<int>(10, 2), names);
        const auto [train, test] = split_70_30(m, 1);
        CHECK(train.size() == 7);
        CHECK(test.size() == 3);
    }
    SUBCASE("two balanced classes split 35/15 each") {
        std::vector<FeatureVector> rows(100);
        std::vector<int> labels;
        for (int i = 0; i < 100; ++i) labels.push_back(i < 50 ? 0 : 1);
        const FeatureMatrix m = build_matrix(rows, labels, names);
        const auto [train, test] = split_70_30(m, 3);
        std::array<int, 2> tr{}, te{};
        for (int l : train.labels) ++tr[static_cast<std::size_t>(l)];
        for (int l : test.labels) ++te[static_cast<std::size_t>(l)];
        CHECK(tr[0] == 35);
        CHECK(tr[1] == 35);
        CHECK(te[0] == 15);
        CHECK(te[1] == 15);
    }
    SUBCASE("same seed, same split; different seed differs") {
        const FeatureMatrix m = testutil::make_blobs(20, 77);
        const auto [a_train, a_test] = split_70_30(m, 5);
        const auto [b_train, b_test] = split_70_30(m, 5);
        CHECK(a_train.rows == b_train.rows);
        CHECK(a_test.labels == b_test.labels);
        const auto [c_train, c_test] = split_70_30(m, 6);
        CHECK(a_train.rows != c_train.rows);
    }
    SUBCASE("a class with fewer than 2 rows is an error") {
        std::vector<FeatureVector> rows(3);
        const FeatureMatrix m = build_matrix(rows, {0, 0, 1}, names);
        CHECK_THROWS_AS(split_70_30(m, 1), DataError);
    }
}

TEST_CASE("predict: argmax winners and the documented tie rule") {
    const std::vector<std::string> pair = {"x", "y"};
    const Mlp hi = testutil::make_constant_net({0.9, 0.1}, pair);
    CHECK(predict(hi, FeatureVector{}).class_index == 0); // winner 1
    const Mlp lo = testutil::make_constant_net({0.4, 0.6}, pair);
    CHECK(predict(lo, FeatureVector{}).class_index == 1); // winner 2
    const Mlp tie = testutil::make_constant_net({0.5, 0.5}, pair);
    CHECK(predict(tie, FeatureVector{}).class_index == 0); // ties to winner 1

    Mlp untrained = init_network(Topology{}, 1);
    CHECK_THROWS_AS(predict(untrained, FeatureVector{}), DataError);
}

TEST_CASE("predict: argmax invariant to consistent affine feature rescaling") {
    const FeatureMatrix m = testutil::make_blobs(30, 21);
    FeatureMatrix scaled = m;
    for (auto& r : scaled.rows)
        for (std::size_t j = 0; j < kFeatureCount; ++j) r[j] = 3.0 * r[j] - 7.5;

    TrainConfig cfg;
    cfg.kind = TopologyKind::pattern;
    cfg.scg.max_iter = 80;
    const Mlp net = train_multiclass_baseline(m, cfg, 5);
    Mlp net_scaled = net; // identical weights, refit normalizer
    net_scaled.normalizer = fit_normalizer(scaled);

    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(predict(net, m.rows[i]).class_index ==
              predict(net_scaled, scaled.rows[i]).class_index);
}

TEST_CASE("model files: byte-identical write-read-write, value round trip") {
    testutil::TempDir tmp;
    const FeatureMatrix m = testutil::make_blobs(10, 3);
    TrainConfig cfg;
    cfg.kind = TopologyKind::cascade;
    cfg.scg.max_iter = 30;
    const Mlp net = train_multiclass_baseline(m, cfg, 12);

    save_model(net, tmp.file("net.json"));
    const Mlp back = load_model(tmp.file("net.json"));
    CHECK(back.params == net.params); // exact values
    CHECK(back.class_names == net.class_names);
    CHECK(back.seed == net.seed);
    CHECK(back.epochs_run == net.epochs_run);
    CHECK(back.final_loss == net.final_loss);
    CHECK(back.topology.kind == net.topology.kind);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        CHECK(back.normalizer.mean[j] == net.normalizer.mean[j]);
        CHECK(back.normalizer.sd[j] == net.normalizer.sd[j]);
    }

    save_model(back, tmp.file("net2.json"));
    CHECK(testutil::read_file(tmp.file("net.json")) ==
          testutil::read_file(tmp.file("net2.json")));
}

TEST_CASE("model files: feature-order version is enforced") {
    testutil::TempDir tmp;
    const Mlp net = testutil::make_constant_net({1.0, 0.0}, {"a", "b"});
    save_model(net, tmp.file("net.json"));
    std::string text = testutil::read_file(tmp.file("net.json"));
    const auto pos = text.find(kFeatureVersion);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string(kFeatureVersion).size(), "hrv15-v9");
    testutil::write_file(tmp.file("bad.json"), text);
    CHECK_THROWS_AS(load_model(tmp.file("bad.json")), FormatError);

    testutil::write_file(tmp.file("junk.json"), "{not json");
    CHECK_THROWS_AS(load_model(tmp.file("junk.json")), FormatError);
    CHECK_THROWS_AS(load_model(tmp.file("missing.json")), IoError);
}
