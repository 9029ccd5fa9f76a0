#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "otcert/core.hpp"
#include "otcert/potential.hpp"
#include "otcert/solve.hpp"

namespace otcert {

using Json = nlohmann::ordered_json;

/// Number mode declared by a problem file ("rational" when absent).
std::string problem_mode(const Json& doc);

/// Typed contents of a problem file. Costs may come from a dense array, a
/// named rule over numeric labels ("quadratic", "absolute") or a sparse table
/// with a default; the rule name is kept so serialisation reproduces it.
template <class T>
struct ProblemData {
  std::vector<Space> spaces;
  std::vector<Measure<T>> measures;
  std::optional<CostTensor<T>> cost;
  std::string cost_rule = "dense";
  std::optional<Coupling<T>> plan;
  std::optional<SupportSet> support;
  std::vector<PotentialVector<T>> potentials;
  std::optional<std::vector<std::vector<ExtReal<T>>>> constraints;
  std::optional<Index> base;
  Json metadata = Json::object();
};

/// Throws std::invalid_argument with a readable message on malformed input.
template <class T>
ProblemData<T> parse_problem(const Json& doc);

template <class T>
Json serialize_problem(const ProblemData<T>& p);

/// 64-bit FNV-1a of the compact serialisation, as 16 hex digits.
std::string instance_hash(const Json& doc);

Json tuple_json(const Index& idx, const std::vector<Space>& spaces);
Index tuple_from_json(const Json& j, const std::vector<Space>& spaces);

template <class T>
Json ext_json(const ExtReal<T>& v) {
  return format_ext(v);
}

template <class T>
ExtReal<T> ext_from_json(const Json& j);

template <class T>
Json coupling_json(const Coupling<T>& g);

template <class T>
Coupling<T> coupling_from_json(const Json& j, const std::vector<Space>& spaces);

template <class T>
Json potential_json(const PotentialVector<T>& p);

template <class T>
Json splitting_json(const SplittingTuple<T>& t);

template <class T>
Json witness_json(const Witness<T>& w, const std::vector<Space>& spaces);

template <class T>
Witness<T> witness_from_json(const Json& j, const std::vector<Space>& spaces);

}  // namespace otcert
