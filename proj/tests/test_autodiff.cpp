#include <cmath>
#include <functional>

#include "doctest.h"
#include "tabsem/tape.hpp"

using namespace tabsem;

namespace {

// central finite differences of the loss against every reverse-mode gradient
void fd_check(ParameterStore<double>& store,
              const std::function<NodeId(Tape<double>&, ParameterStore<double>&)>& build,
              double tol = 1e-7) {
    Tape<double> tape;
    NodeId loss = build(tape, store);
    REQUIRE(tape.len(loss) == 1);
    store.zero_grad();
    tape.backward(loss);

    const double h = 1e-6;
    for (const std::string& name : store.names()) {
        Tensor<double>& t = store.at(name);
        for (size_t i = 0; i < t.size(); ++i) {
            double saved = t.value[i];
            t.value[i] = saved + h;
            Tape<double> up;
            double lu = up.scalar(build(up, store));
            t.value[i] = saved - h;
            Tape<double> dn;
            double ld = dn.scalar(build(dn, store));
            t.value[i] = saved;
            double fd = (lu - ld) / (2 * h);
            double rel = std::fabs(fd - t.grad[i]) /
                         std::max(1.0, std::fabs(fd) + std::fabs(t.grad[i]));
            CAPTURE(name);
            CAPTURE(i);
            CHECK(rel < tol);
        }
    }
}

ParameterStore<double> seeded_store(const std::vector<std::pair<std::string, std::vector<int>>>& spec,
                                    uint64_t seed) {
    ParameterStore<double> store;
    SplitMix64 rng(seed);
    for (const auto& [name, shape] : spec) {
        Tensor<double>& t = store.create(name, shape);
        for (auto& v : t.value) v = (rng.next_double() - 0.5);
    }
    return store;
}

}  // namespace

TEST_CASE("gradient of a linear probe is its coefficient vector") {
    auto store = seeded_store({{"x", {4}}}, 1);
    std::vector<double> coef = {2.0, -1.0, 0.5, 3.0};
    Tape<double> tape;
    NodeId x = tape.param(store.at("x"));
    NodeId c = tape.constant(coef);
    NodeId loss = tape.dot(c, x);
    store.zero_grad();
    tape.backward(loss);
    for (size_t i = 0; i < 4; ++i) CHECK(store.at("x").grad[i] == coef[i]);
}

TEST_CASE("matvec, column blocks, add, mul, activations") {
    auto store = seeded_store({{"w", {3, 5}}, {"x", {5}}, {"y", {3}}, {"z", {2}}}, 2);
    fd_check(store, [](Tape<double>& t, ParameterStore<double>& s) {
        NodeId w = t.param(s.at("w"));
        NodeId x = t.param(s.at("x"));
        NodeId y = t.param(s.at("y"));
        NodeId h = t.add(t.matvec(w, x), y);
        NodeId a = t.mul(t.sigmoid(h), t.tanh(h));
        NodeId z = t.param(s.at("z"));
        NodeId block = t.matvec_cols(w, z, 1);  // columns 1..2
        return t.dot(a, t.relu(t.add(block, y)));
    });
}

TEST_CASE("concat, slice, lincomb") {
    auto store = seeded_store({{"a", {3}}, {"b", {2}}}, 3);
    fd_check(store, [](Tape<double>& t, ParameterStore<double>& s) {
        NodeId a = t.param(s.at("a"));
        NodeId b = t.param(s.at("b"));
        NodeId cat = t.concat({a, b, a});
        NodeId sl = t.slice(cat, 2, 4);
        NodeId lc = t.lincomb({{0.5, sl}, {-2.0, t.slice(cat, 0, 4)}});
        return t.dot(lc, lc);
    });
}

TEST_CASE("weighted_sum with node weights") {
    auto store = seeded_store({{"w1", {1}}, {"w2", {1}}, {"v1", {3}}, {"v2", {3}}}, 4);
    fd_check(store, [](Tape<double>& t, ParameterStore<double>& s) {
        NodeId w1 = t.param(s.at("w1"));
        NodeId w2 = t.param(s.at("w2"));
        NodeId v1 = t.param(s.at("v1"));
        NodeId v2 = t.param(s.at("v2"));
        NodeId pooled = t.weighted_sum({{t.sigmoid(w1), v1}, {t.exp(w2), v2}});
        return t.dot(pooled, v1);
    });
}

TEST_CASE("logsumexp family") {
    auto store = seeded_store({{"s", {6}}}, 5);
    fd_check(store, [](Tape<double>& t, ParameterStore<double>& s) {
        NodeId v = t.param(s.at("s"));
        NodeId l1 = t.logsumexp({t.pick(v, 0), t.pick(v, 2), t.pick(v, 4)});
        NodeId l2 = t.logsumexp_subset(v, {1, 3, 5});
        NodeId p = t.exp(t.sub(t.pick(v, 0), l1));  // a softmax probability
        return t.add(t.sub(l1, l2), p);
    });
}

TEST_CASE("composed micro-network against finite differences") {
    auto store = seeded_store(
        {{"emb", {4, 3}}, {"w1", {5, 3}}, {"b1", {5}}, {"w2", {1, 5}}, {"b2", {1}}}, 6);
    fd_check(store, [](Tape<double>& t, ParameterStore<double>& s) {
        NodeId emb = t.param(s.at("emb"));
        NodeId w1 = t.param(s.at("w1"));
        NodeId b1 = t.param(s.at("b1"));
        NodeId w2 = t.param(s.at("w2"));
        NodeId b2 = t.param(s.at("b2"));
        // rows of the embedding table via slice
        NodeId x0 = t.slice(emb, 0, 3);
        NodeId x2 = t.slice(emb, 6, 3);
        NodeId mean = t.lincomb({{0.5, x0}, {0.5, x2}});
        NodeId hidden = t.relu(t.add(t.matvec(w1, mean), b1));
        NodeId out = t.add(t.matvec(w2, hidden), b2);
        // log-softmax-ish scalar path
        NodeId z = t.logsumexp({t.pick(out, 0), t.constant_scalar(0.0)});
        return t.sub(z, t.pick(out, 0));
    });
}

TEST_CASE("gradients of unused parameters are exactly zero, touched set reports use") {
    auto store = seeded_store({{"used", {3}}, {"unused", {3}}}, 7);
    Tape<double> tape;
    NodeId u = tape.param(store.at("used"));
    NodeId loss = tape.dot(u, u);
    store.zero_grad();
    tape.backward(loss);
    for (double g : store.at("unused").grad) CHECK(g == 0.0);
    CHECK(tape.touched().count(&store.at("used")) == 1);
    CHECK(tape.touched().count(&store.at("unused")) == 0);
}

TEST_CASE("float instantiation matches double forward values coarsely") {
    ParameterStore<float> fs;
    auto& t = fs.create("x", {3});
    t.value = {0.5f, -0.25f, 1.5f};
    Tape<float> tape;
    NodeId x = tape.param(fs.at("x"));
    NodeId y = tape.logsumexp({tape.pick(x, 0), tape.pick(x, 1), tape.pick(x, 2)});
    double expect = std::log(std::exp(0.5) + std::exp(-0.25) + std::exp(1.5));
    CHECK(std::fabs(tape.scalar(y) - expect) < 1e-5);
    fs.zero_grad();
    tape.backward(y);
    float sum = 0;
    for (float g : fs.at("x").grad) sum += g;
    CHECK(std::fabs(sum - 1.0f) < 1e-5);  // softmax weights sum to one
}

TEST_CASE("tape reset recycles arenas") {
    Tape<double> tape;
    ParameterStore<double> store;
    auto& x = store.create("x", {2});
    x.value = {1.0, 2.0};
    NodeId a = tape.param(x);
    (void)tape.dot(a, a);
    size_t before = tape.n_nodes();
    tape.reset();
    CHECK(tape.n_nodes() == 0);
    NodeId b = tape.param(x);
    NodeId l = tape.dot(b, b);
    CHECK(tape.scalar(l) == doctest::Approx(5.0));
    CHECK(before > 0);
}

TEST_CASE("checkpoint round trip") {
    ParameterStore<float> store;
    auto& a = store.create("alpha", {2, 3});
    for (size_t i = 0; i < a.size(); ++i) a.value[i] = static_cast<float>(i) * 0.25f;
    auto& b = store.create("beta", {4});
    for (size_t i = 0; i < b.size(); ++i) b.value[i] = -static_cast<float>(i);
    std::map<std::string, std::string> meta = {{"vocab", "a\nb\nc"}, {"mode", "structured"}};
    save_checkpoint(store, meta, "ckpt_test.bin");
    auto [loaded, meta2] = load_checkpoint("ckpt_test.bin");
    CHECK(meta2 == meta);
    CHECK(loaded.names() == store.names());
    CHECK(loaded.at("alpha").shape == std::vector<int>{2, 3});
    for (size_t i = 0; i < a.size(); ++i) CHECK(loaded.at("alpha").value[i] == a.value[i]);
    std::remove("ckpt_test.bin");
}
