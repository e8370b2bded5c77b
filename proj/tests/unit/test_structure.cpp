#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bdn/error.hpp"
#include "bdn/inference.hpp"
#include "bdn/structure.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace bdn;

namespace {

Variable var(std::string name, int states) {
  Variable v{std::move(name), {}, Role::chance};
  for (int s = 0; s < states; ++s) v.states.push_back("s" + std::to_string(s));
  return v;
}

Dataset make_data(std::vector<Variable> vars, const std::vector<std::vector<int>>& rows) {
  Dataset d;
  d.variables = std::move(vars);
  d.codes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.variables.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) d.codes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return d;
}

Dataset noisy_data(Rng& rng, int cols, int rows) {
  std::vector<Variable> vars;
  for (int c = 0; c < cols; ++c) vars.push_back(var("X" + std::to_string(c), 2 + static_cast<int>(uniform_index(rng, 3))));
  Dataset d;
  d.variables = vars;
  d.codes.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int card = vars[static_cast<std::size_t>(c)].cardinality();
      // Mild dependence on the previous column so searches find edges.
      int x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(card)));
      if (c > 0 && uniform01(rng) < 0.6) x = d.codes(r, c - 1) % card;
      d.codes(r, c) = x;
    }
  }
  return d;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("bic of a single binary node with counts (3,1)") {
  const auto d = make_data({var("A", 2)}, {{0}, {0}, {0}, {1}});
  const double expected = 3 * std::log(0.75) + std::log(0.25) - std::log(4.0) / 2;
  CHECK(bic_family_score(d, 0, std::vector<int>{}) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(-2.9424).epsilon(1e-4));
  CHECK(bic_family_score(make_data({var("A", 2)}, {{1}}), 0, std::vector<int>{}) == 0.0);
  CHECK(code_of([&] { bic_family_score(d, "B", {}); }) == ErrorCode::schema);
}

TEST_CASE("bic families agree with the counting oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = noisy_data(rng, 5, 20 + trial * 7);
    const int child = trial % 5;
    std::vector<int> parents;
    for (int p = 0; p < 5; ++p) {
      if (p != child && uniform01(rng) < 0.4) parents.push_back(p);
    }
    const double got = bic_family_score(d, child, parents);
    const double want = oracle::bic_family(d, child, parents);
    CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("independent parent lowers the family score") {
  // B is exactly balanced within each state of A.
  const auto d = make_data({var("A", 2), var("B", 2)}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}, {0, 1}});
  CHECK(bic_family_score(d, 1, std::vector<int>{0}) < bic_family_score(d, 1, std::vector<int>{}));
}

TEST_CASE("bic_score is decomposable") {
  Rng rng(4);
  const auto d = noisy_data(rng, 5, 200);
  Dag empty(d.names());
  const auto s = bic_score(empty, d);
  double sum = 0.0;
  for (int c = 0; c < 5; ++c) sum += oracle::bic_family(d, c, {});
  CHECK(s.score == doctest::Approx(sum).epsilon(1e-12));

  Dag g(d.names(), {{"X0", "X1"}, {"X1", "X2"}, {"X0", "X2"}});
  const auto sg = bic_score(g, d);
  double fam = 0.0;
  for (const auto& [name, v] : sg.per_family) fam += v;
  CHECK(std::abs(sg.score - fam) <= 1e-9);
  // A single move changes only the child's family.
  Dag g2 = g;
  g2.add_edge("X3", "X4");
  const auto sg2 = bic_score(g2, d);
  const double delta = oracle::bic_family(d, 4, {3}) - oracle::bic_family(d, 4, {});
  CHECK(std::abs((sg2.score - sg.score) - delta) <= 1e-9);
}

TEST_CASE("true structure outscores the empty graph") {
  Rng rng(30);
  oracle::RandomNetOptions o;
  o.nodes = 5;
  o.max_parents = 2;
  auto net = oracle::random_network(rng, o);
  while (net.dag().edge_count() == 0) net = oracle::random_network(rng, o);
  const auto data = forward_sample(net, 10000, 1);
  CHECK(bic_score(net.dag(), data).score > bic_score(Dag(data.names()), data).score);
}

TEST_CASE("reversing the edge of a two-node network keeps the score") {
  // Dim is r_A r_B - 1 in both directions, so the penalty difference is zero
  // and the likelihoods agree; checked by recomputing both families.
  Rng rng(2);
  for (auto [ra, rb] : {std::pair{2, 2}, {2, 3}, {3, 2}, {3, 4}, {2, 5}}) {
    std::vector<std::vector<int>> rows;
    for (int i = 0; i < 300; ++i) {
      const int a = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(ra)));
      const int b = uniform01(rng) < 0.7 ? a % rb : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(rb)));
      rows.push_back({a, b});
    }
    const auto d = make_data({var("A", ra), var("B", rb)}, rows);
    const double ab = oracle::bic_family(d, 0, {}) + oracle::bic_family(d, 1, {0});
    const double ba = oracle::bic_family(d, 1, {}) + oracle::bic_family(d, 0, {1});
    CHECK(std::abs(ab - ba) <= 1e-9 * std::abs(ab));
    CHECK(std::abs(bic_score(Dag(d.names(), {{"A", "B"}}), d).score - ab) <= 1e-9 * std::abs(ab));
    CHECK(std::abs(bic_score(Dag(d.names(), {{"B", "A"}}), d).score - ba) <= 1e-9 * std::abs(ba));
  }
}

TEST_CASE("noisy copy: first move adds an edge between A and B") {
  Rng rng(9);
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < 10000; ++i) {
    const int a = static_cast<int>(uniform_index(rng, 2));
    const int b = uniform01(rng) < 0.9 ? a : 1 - a;
    rows.push_back({a, b, static_cast<int>(uniform_index(rng, 2))});
  }
  const auto d = make_data({var("A", 2), var("B", 2), var("C", 2)}, rows);
  const double empty = bic_score(Dag(d.names()), d).score;
  CHECK(bic_score(Dag(d.names(), {{"A", "B"}}), d).score > empty);
  CHECK(bic_score(Dag(d.names(), {{"B", "A"}}), d).score > empty);
  const auto r = hill_climb(d, {}, Dag(d.names()));
  REQUIRE_FALSE(r.moves.empty());
  CHECK(r.moves[0].op == Move::Op::add);
  CHECK(std::min(r.moves[0].parent, r.moves[0].child) == 0);
  CHECK(std::max(r.moves[0].parent, r.moves[0].child) == 1);
  // Equal gains in both directions: the lexicographic tie-break picks A -> B.
  CHECK(r.result.dag.named_edges() == std::vector<std::pair<std::string, std::string>>{{"A", "B"}});
}

TEST_CASE("independent uniform columns stay empty") {
  Rng rng(12);
  Dataset d;
  for (int c = 0; c < 4; ++c) d.variables.push_back(var("U" + std::to_string(c), 3));
  d.codes.resize(10000, 4);
  for (int r = 0; r < 10000; ++r) {
    for (int c = 0; c < 4; ++c) d.codes(r, c) = static_cast<int>(uniform_index(rng, 3));
  }
  for (int p = 0; p < 4; ++p) {
    for (int c = 0; c < 4; ++c) {
      if (p != c) CHECK(oracle::bic_family(d, c, {p}) < oracle::bic_family(d, c, {}));
    }
  }
  const auto r = hill_climb(d, {}, Dag(d.names()));
  CHECK(r.result.dag.edge_count() == 0);
  CHECK(r.trace.size() == 1);
}

TEST_CASE("hill_climb contract on random data") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = noisy_data(rng, 5, 150);
    EdgeConstraints cons;
    cons.blacklist.insert({std::string(kAnyNode), "X" + std::to_string(trial % 5)});
    cons.blacklist.insert({"X" + std::to_string((trial + 1) % 5), "X" + std::to_string((trial + 3) % 5)});
    if (trial % 2 == 0) cons.whitelist.insert({"X" + std::to_string((trial + 2) % 5), "X" + std::to_string((trial + 4) % 5)});
    const auto r = hill_climb(d, cons, cons.required_dag(d.names()));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] > r.trace[i - 1]);
    CHECK(r.trace.back() == r.result.score);
    CHECK(r.result.dag.is_acyclic());
    for (const auto& [p, c] : r.result.dag.named_edges()) CHECK_FALSE(cons.forbids(p, c));
    for (const auto& [p, c] : cons.whitelist) CHECK(r.result.dag.has_edge(r.result.dag.index_of(p), r.result.dag.index_of(c)));
    CHECK(std::abs(r.result.score - bic_score(r.result.dag, d).score) <= 1e-9 * std::abs(r.result.score));
    // Local optimum: no single legal addition improves the score.
    const auto& g = r.result.dag;
    for (int p = 0; p < 5; ++p) {
      for (int c = 0; c < 5; ++c) {
        if (p == c || g.has_edge(p, c) || g.has_edge(c, p) || g.has_path(c, p)) continue;
        if (cons.forbids(g.name(p), g.name(c))) continue;
        Dag h = g;
        h.add_edge(p, c);
        CHECK(bic_score(h, d).score <= r.result.score + 1e-10 * std::abs(r.result.score));
      }
    }
  }
}

TEST_CASE("blacklist wildcard keeps State parentless") {
  Rng rng(5);
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < 2000; ++i) {
    const int s = static_cast<int>(uniform_index(rng, 3));
    rows.push_back({s, uniform01(rng) < 0.8 ? s % 2 : 1 - s % 2});
  }
  const auto d = make_data({var("State", 3), var("Y", 2)}, rows);
  const auto cons = constraints_from_json(json::parse(R"([["*", "State"]])"));
  const auto r = hill_climb(d, cons, Dag(d.names()));
  CHECK(r.result.dag.parents(0).empty());
  CHECK(r.result.dag.has_edge(0, 1));
}

TEST_CASE("constraint errors") {
  const auto d = make_data({var("A", 2), var("B", 2)}, {{0, 0}, {1, 1}});
  EdgeConstraints cons;
  cons.blacklist.insert({"A", "B"});
  CHECK(code_of([&] { hill_climb(d, cons, Dag(d.names(), {{"A", "B"}})); }) == ErrorCode::constraint);
  cons.whitelist.insert({"A", "B"});
  CHECK(code_of([&] { cons.validate(d.names()); }) == ErrorCode::constraint);
  EdgeConstraints cyc;
  cyc.whitelist = {{"A", "B"}, {"B", "A"}};
  CHECK(code_of([&] { cyc.validate(d.names()); }) == ErrorCode::constraint);
  EdgeConstraints unknown;
  unknown.blacklist.insert({"A", "Z"});
  CHECK(code_of([&] { unknown.validate(d.names()); }) == ErrorCode::constraint);
  EdgeConstraints need;
  need.whitelist.insert({"A", "B"});
  CHECK(code_of([&] { hill_climb(d, need, Dag(d.names())); }) == ErrorCode::constraint);
}

TEST_CASE("constraints JSON") {
  const auto c = constraints_from_json(json::parse(R"({"blacklist": [["*", "State"], ["A", "B"]], "whitelist": [["B", "C"]]})"));
  CHECK(c.forbids("Q", "State"));
  CHECK(c.forbids("A", "B"));
  CHECK_FALSE(c.forbids("B", "A"));
  CHECK(c.requires_edge("B", "C"));
  const auto back = constraints_from_json(constraints_to_json(c));
  CHECK(back.blacklist == c.blacklist);
  CHECK(back.whitelist == c.whitelist);
}

TEST_CASE("aggregation: majority direction and thresholds") {
  const std::vector<std::string> nodes{"u", "v", "w"};
  std::vector<Dag> dags;
  for (int i = 0; i < 4; ++i) dags.emplace_back(nodes, std::vector<std::pair<std::string, std::string>>{{"u", "v"}});
  for (int i = 0; i < 3; ++i) dags.emplace_back(nodes, std::vector<std::pair<std::string, std::string>>{{"v", "u"}});
  for (int i = 0; i < 3; ++i) dags.emplace_back(nodes, std::vector<std::pair<std::string, std::string>>{{"v", "w"}});
  const auto r = aggregate_structures(nodes, dags, {}, 0.5);
  CHECK(r.edge_strength.at({"u", "v"}) == doctest::Approx(0.4));
  CHECK(r.edge_strength.at({"v", "u"}) == doctest::Approx(0.3));
  CHECK(r.undirected_strength("u", "v") == doctest::Approx(0.7));
  CHECK(r.direction_strength.at({"u", "v"}) == doctest::Approx(4.0 / 7.0));
  CHECK(r.consensus.named_edges() == std::vector<std::pair<std::string, std::string>>{{"u", "v"}});
  for (const auto& [p, c] : r.consensus.named_edges()) CHECK(r.undirected_strength(p, c) > r.threshold);

  // Single replicate: the consensus is that DAG.
  const Dag one(nodes, {{"w", "u"}, {"u", "v"}});
  CHECK(aggregate_structures(nodes, {one}, {}, 0.5).consensus == one);
}

TEST_CASE("aggregation breaks cycles at the weakest edge") {
  const std::vector<std::string> nodes{"a", "b", "c"};
  std::vector<Dag> dags;
  auto add = [&](int n, std::vector<std::pair<std::string, std::string>> e) {
    for (int i = 0; i < n; ++i) dags.emplace_back(nodes, e);
  };
  add(4, {{"a", "b"}, {"b", "c"}});
  add(3, {{"b", "c"}, {"c", "a"}});
  add(3, {{"a", "b"}, {"c", "a"}});
  // a->b 0.7, b->c 0.7, c->a 0.6: all pass and form a cycle.
  const auto r = aggregate_structures(nodes, dags, {}, 0.5);
  CHECK(r.consensus.is_acyclic());
  CHECK(r.consensus.named_edges() == std::vector<std::pair<std::string, std::string>>{{"a", "b"}, {"b", "c"}});
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("c -> a") != std::string::npos);
}

TEST_CASE("bootstrap ensemble") {
  Rng rng(41);
  oracle::RandomNetOptions o;
  o.nodes = 4;
  const auto net = oracle::random_network(rng, o);
  const auto data = forward_sample(net, 400, 3);

  EnsembleOptions one;
  one.n_bootstraps = 1;
  one.seed = 5;
  const auto single = bootstrap_ensemble(data, {}, one);
  Rng r5(5);
  std::vector<Eigen::Index> rows(400);
  for (auto& x : rows) x = static_cast<Eigen::Index>(uniform_index(r5, 400));
  CHECK(single.consensus == hill_climb(data.select_rows(rows), {}, Dag(data.names())).result.dag);

  EnsembleOptions opts;
  opts.n_bootstraps = 15;
  opts.seed = 99;
  opts.workers = 1;
  std::size_t calls = 0;
  opts.progress = [&](std::size_t done, std::size_t total) {
    ++calls;
    CHECK(done <= total);
  };
  const auto a = bootstrap_ensemble(data, {}, opts);
  CHECK(calls == 15);
  opts.workers = 4;
  opts.progress = nullptr;
  const auto b = bootstrap_ensemble(data, {}, opts);
  CHECK(canonical_dump(ensemble_to_json(a)) == canonical_dump(ensemble_to_json(b)));
  for (const auto& [e, s] : a.edge_strength) {
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
  }
  const auto back = ensemble_from_json(ensemble_to_json(a));
  CHECK(canonical_dump(ensemble_to_json(back)) == canonical_dump(ensemble_to_json(a)));

  EnsembleOptions zero;
  zero.n_bootstraps = 0;
  CHECK(code_of([&] { bootstrap_ensemble(data, {}, zero); }) == ErrorCode::validation);
}

TEST_CASE("fit_cpts") {
  const auto d = make_data({var("A", 2)}, {{0}, {0}, {0}, {1}});
  const auto net = fit_cpts(Dag(d.names()), d);
  CHECK(net.cpt(0).table(0, 0) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
  CHECK(net.cpt(0).table(0, 1) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));

  // Parent state 2 of A is never observed.
  const auto d2 = make_data({var("A", 3), var("B", 2)}, {{0, 0}, {0, 1}, {1, 1}, {1, 1}, {1, 0}});
  const auto n2 = fit_cpts(Dag(d2.names(), {{"A", "B"}}), d2);
  CHECK(n2.cpt(1).table(2, 0) == 0.5);
  CHECK(n2.cpt(1).table(2, 1) == 0.5);
  CHECK(n2.cpt(1).table(1, 1) == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
  CHECK(validate_network(n2).empty());

  const auto n0 = fit_cpts(Dag(d2.names(), {{"A", "B"}}), make_data({var("A", 2), var("B", 2)}, {{0, 0}, {0, 1}, {1, 1}, {1, 1}, {1, 0}}), 0.0);
  CHECK(n0.cpt(1).table(0, 0) == 0.5);
  CHECK(n0.cpt(1).table(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}
