#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "otcert/fixtures.hpp"
#include "otcert/io.hpp"
#include "otcert/monotone.hpp"
#include "otcert/multi.hpp"

using namespace otcert;
using oracle::EQ;
using oracle::Q;

namespace {

Json parse(const char* text) { return Json::parse(text); }

template <class T>
Json round_trip(const Json& doc) {
  return serialize_problem(parse_problem<T>(doc));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("dense problem round trip") {
    auto doc = parse(R"({
      "spaces": [["a", "b"], 2],
      "measures": [["1/3", "2/3"], [0.5, "1/2"]],
      "cost": [[0, "inf"], ["3/2", 1]],
      "plan": [{"at": ["a", "1"], "weight": "1/3"}, {"at": ["b", "2"], "weight": "1/2"},
               {"at": ["b", "1"], "weight": "1/6"}, {"at": ["a", "2"], "weight": 0}],
      "support": [["a", "1"], ["b", "2"]],
      "potentials": [["0", "-inf"]],
      "base": ["a", "1"],
      "metadata": {"note": "x"}
    })");
    auto p = parse_problem<Q>(doc);
    CHECK(p.spaces[1].labels() == std::vector<std::string>{"1", "2"});
    CHECK(p.measures[0].weights[0] == Q(1, 3));
    CHECK((*p.cost)({0, 1}).is_pos_inf());
    CHECK((*p.cost)({1, 0}) == EQ(Q(3, 2)));
    CHECK(p.plan->atoms.size() == 3);
    CHECK(p.potentials[0][1].is_neg_inf());
    CHECK(*p.base == Index{0, 0});
    auto once = serialize_problem(p);
    CHECK(once["cost"]["dense"][0][1] == "inf");
    CHECK(round_trip<Q>(once) == once);
    CHECK(instance_hash(once) == instance_hash(round_trip<Q>(once)));
    CHECK(instance_hash(once).size() == 16);
  }

  TEST_CASE("rule and table costs survive serialisation") {
    auto rule = parse(R"({"spaces": [["0", "1", "3"], ["0", "2"], ["1"]], "cost": {"rule": "quadratic"}})");
    auto p = parse_problem<Q>(rule);
    // (0-2)^2/2 + (0-1)^2/2 + (2-1)^2/2
    CHECK((*p.cost)({0, 1, 0}) == EQ(Q(3)));
    auto out = serialize_problem(p);
    CHECK(out["cost"] == Json{{"rule", "quadratic"}});
    CHECK(round_trip<Q>(out) == out);
    auto abs = parse(R"({"spaces": [["-1", "1/2"], ["2"]], "cost": {"rule": "absolute"}})");
    CHECK((*parse_problem<Q>(abs).cost)({0, 0}) == EQ(Q(3)));
    CHECK_THROWS_AS(parse_problem<Q>(parse(R"({"spaces": [["a"], ["0"]], "cost": {"rule": "absolute"}})")),
                    std::invalid_argument);

    auto table = parse(R"({"spaces": [2, 2], "cost": {"table": {"default": "inf",
                          "entries": [{"at": ["1", "2"], "value": "7/2"}, {"at": ["2", "2"], "value": 0}]}}})");
    auto t = parse_problem<Q>(table);
    CHECK((*t.cost)({0, 1}) == EQ(Q(7, 2)));
    CHECK((*t.cost)({0, 0}).is_pos_inf());
    auto ts = serialize_problem(t);
    CHECK(ts["cost"]["table"]["entries"].size() == 2);
    CHECK(round_trip<Q>(ts) == ts);
  }

  TEST_CASE("float mode") {
    auto doc = parse(R"({"mode": "float", "spaces": [2, 2], "measures": [[0.25, 0.75], ["1/2", "1/2"]],
                         "cost": [[0.1, "inf"], [1e-3, 2]]})");
    CHECK(problem_mode(doc) == "float");
    auto p = parse_problem<double>(doc);
    CHECK(p.measures[1].weights[0] == doctest::Approx(0.5));
    CHECK((*p.cost)({0, 1}).is_pos_inf());
    CHECK(serialize_problem(p)["mode"] == "float");
    CHECK_THROWS(problem_mode(parse(R"({"mode": "decimal", "spaces": [1, 1]})")));
  }

  TEST_CASE("malformed input is rejected") {
    const char* bad[] = {
        R"({"spaces": [2]})",
        R"({"spaces": [2, 2], "cost": [[0, "nan"], [1, 1]]})",
        R"({"spaces": [2, 2], "cost": [[0, 1], [1]]})",
        R"({"spaces": [2, 2], "cost": [0, 1, 1, 1]})",
        R"({"spaces": [2, 2], "measures": [["1/2", "1/3"], ["1/2", "1/2"]]})",
        R"({"spaces": [2, 2], "measures": [["3/2", "-1/2"], ["1/2", "1/2"]]})",
        R"({"spaces": [2, 2], "plan": [{"at": ["1", "1"], "weight": "-1"}]})",
        R"({"spaces": [2, 2], "support": [["1", "3"]]})",
        R"({"spaces": [2, 2], "support": [["1"]]})",
        R"({"spaces": [2, 2], "cost": {"shape": 1}})",
        R"({"spaces": [["a", "a"], 2]})",
        R"({"spaces": [2, 2], "cost": [["-inf", 0], [0, 0]]})",
        R"([1, 2])",
    };
    for (const char* text : bad) {
      CAPTURE(text);
      CHECK_THROWS(parse_problem<Q>(parse(text)));
    }
  }

  TEST_CASE("witness json round trips and still replays") {
    Space s = Space::numbered(2);
    std::vector<Space> sp{s, s};
    CostTensor<Q> c(sp, std::vector<EQ>{EQ(Q(0)), EQ(Q(1)), EQ(Q(1)), EQ(Q(0))});

    auto cyc = check_ccm2(SupportSet{sp, {{0, 1}, {1, 0}}}, c);
    REQUIRE(!cyc);
    auto j = witness_json<Q>(cyc.witness, sp);
    CHECK(j["kind"] == "cycle");
    auto back = witness_from_json<Q>(j, sp);
    CHECK(replay_cycle(std::get<CycleWitness<Q>>(back), c));
    CHECK(witness_json<Q>(back, sp) == j);

    auto grid = gen_appendix_a<Q>(4, std::sqrt(2.0) / 4);
    auto conn = check_connecting(grid.support, grid.cost);
    REQUIRE(!conn);
    auto cj = witness_json<Q>(conn.witness, grid.cost.spaces());
    CHECK(cj["kind"] == "components");
    auto cb = witness_from_json<Q>(cj, grid.cost.spaces());
    CHECK(replay_components(std::get<ComponentWitness>(cb), grid.cost));

    Space s3 = Space::numbered(2);
    CostTensor<Q> c3({s3, s3, s3}, [](std::span<const std::size_t> i) {
      if (i[0] == i[1] && i[1] == i[2]) return EQ(Q(1));
      return i[1] == i[2] ? EQ(Q(0)) : EQ(Q(5));
    });
    SupportSet g3{c3.spaces(), {{0, 0, 0}, {1, 1, 1}}};
    auto perm = check_ccm_multi(g3, c3, 2);
    auto pj = witness_json<Q>(perm.witness, c3.spaces());
    CHECK(pj["kind"] == "permutation");
    CHECK(replay_permutation(std::get<PermutationWitness<Q>>(witness_from_json<Q>(pj, c3.spaces())), c3, Aggregate::Sum));

    auto sub = check_finitely_optimal(uniform_coupling<Q>(g3), c3, 2, Aggregate::Sum);
    auto sj = witness_json<Q>(sub.witness, c3.spaces());
    CHECK(sj["kind"] == "submeasure");
    CHECK(replay_submeasure(std::get<SubmeasureWitness<Q>>(witness_from_json<Q>(sj, c3.spaces())), c3, Aggregate::Sum));

    TupleWitness<Q> tw{{1, 0}, EQ::pos_inf()};
    auto tj = witness_json<Q>(Witness<Q>(tw), sp);
    CHECK(tj["slack"] == "inf");
    CHECK(std::get<TupleWitness<Q>>(witness_from_json<Q>(tj, sp)).tuple == Index{1, 0});

    MassWitness<Q> mw{1, Q(-1, 4)};
    auto mj = witness_json<Q>(Witness<Q>(mw), sp);
    auto mb = std::get<MassWitness<Q>>(witness_from_json<Q>(mj, sp));
    CHECK(mb.negative_index == std::optional<std::size_t>(1));
    CHECK(mb.deficit == Q(-1, 4));

    SubsetWitness<Q> subset{{0, 1}, Q(1, 2), Q(1, 3)};
    auto ssj = witness_json<Q>(Witness<Q>(subset), sp);
    CHECK(std::get<SubsetWitness<Q>>(witness_from_json<Q>(ssj, sp)).blocked_mass == Q(1, 3));

    TripleWitness<Q> tr{0, 1, 1, EQ(Q(2)), EQ(Q(1))};
    auto trj = witness_json<Q>(Witness<Q>(tr), sp);
    CHECK(std::get<TripleWitness<Q>>(witness_from_json<Q>(trj, sp)).z == 1);

    CHECK(witness_json<Q>(Witness<Q>{}, sp).is_null());
  }

  TEST_CASE("fixture generators validate their parameters") {
    CHECK_THROWS_AS(gen_appendix_a<Q>(4, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(gen_appendix_a<Q>(4, 0.0), std::invalid_argument);
    CHECK_NOTHROW(gen_appendix_a<Q>(4, std::sqrt(2.0) / 4));
    CHECK_THROWS_AS(gen_petrache<Q>(3, [](unsigned a) { return Q(a); }), std::invalid_argument);
    CHECK_THROWS_AS(gen_petrache<Q>(3, [](unsigned) { return Q(1); }), std::invalid_argument);
    CHECK_THROWS_AS(gen_petrache<Q>(0), std::invalid_argument);
    auto fx = gen_petrache<Q>(2);
    CHECK(fx.tail_mass == Q(1, 16));
    CHECK(Q(1, 6) < fx.condition_sum);
    CHECK_THROWS_AS(gen_shift_orbit<Q>(0, 0.3), std::invalid_argument);
  }
}
