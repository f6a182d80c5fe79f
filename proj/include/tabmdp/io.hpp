#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tabmdp/errors.hpp"
#include "tabmdp/mdp.hpp"

namespace tabmdp::io {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& obj, const char* field) {
  if (!obj.is_object()) throw InvalidArgument("expected a JSON object at top level");
  const auto it = obj.find(field);
  if (it == obj.end()) throw InvalidArgument(std::string("missing field '") + field + "'");
  return *it;
}

inline std::size_t positive_int(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw InvalidArgument(std::string("field '") + field + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InvalidArgument("field '" + where + "' must be a number");
  return v.get<double>();
}

}  // namespace detail

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json policy_to_json(const Policy& pi) { return json(pi.actions()); }

/// Schema: { num_states, num_actions, discount, reward: [S*A], kernel: [[S] x S*A] }.
inline TabularMDP mdp_from_json(const json& doc) {
  const std::size_t n_s = detail::positive_int(doc, "num_states");
  const std::size_t n_a = detail::positive_int(doc, "num_actions");
  const double discount = detail::number(detail::require(doc, "discount"), "discount");
  const json& reward = detail::require(doc, "reward");
  const json& kernel = detail::require(doc, "kernel");
  const std::size_t pairs = n_s * n_a;

  if (!reward.is_array() || reward.size() != pairs) {
    throw InvalidArgument("field 'reward' must be an array of length " + std::to_string(pairs));
  }
  if (!kernel.is_array() || kernel.size() != pairs) {
    throw InvalidArgument("field 'kernel' must be an array of " + std::to_string(pairs) + " rows");
  }
  Vector r(static_cast<Eigen::Index>(pairs));
  Matrix p(static_cast<Eigen::Index>(pairs), static_cast<Eigen::Index>(n_s));
  for (std::size_t i = 0; i < pairs; ++i) {
    r(static_cast<Eigen::Index>(i)) = detail::number(reward[i], "reward[" + std::to_string(i) + "]");
    const json& row = kernel[i];
    if (!row.is_array() || row.size() != n_s) {
      throw InvalidArgument("field 'kernel[" + std::to_string(i) + "]' must have length " +
                            std::to_string(n_s));
    }
    for (std::size_t j = 0; j < n_s; ++j) {
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::number(row[j], "kernel[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  try {
    return TabularMDP(n_s, n_a, std::move(p), std::move(r), discount);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("invalid MDP: ") + e.what());
  }
}

inline json mdp_to_json(const TabularMDP& mdp) {
  json kernel = json::array();
  for (Eigen::Index i = 0; i < mdp.kernel().rows(); ++i) {
    kernel.push_back(vector_to_json(mdp.kernel().row(i).transpose()));
  }
  return json{{"num_states", mdp.num_states()},
              {"num_actions", mdp.num_actions()},
              {"discount", mdp.discount()},
              {"reward", vector_to_json(mdp.reward())},
              {"kernel", std::move(kernel)}};
}

/// Parses JSON text; syntax errors carry nlohmann's line/column position.
inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

inline TabularMDP load_mdp(const std::string& path) {
  const json doc = read_json_file(path);
  try {
    return mdp_from_json(doc);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

}  // namespace tabmdp::io
