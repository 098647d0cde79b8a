#pragma once

// Text formats.
//
// JPC sample file:
//   m n k
//   R: r1 ... rk
//   t delta s        (k lines)
// Blank lines and anything after '#' are ignored. serialize_jpc writes the
// canonical form: single spaces, shortest round-trip decimal for t, no comments.
//
// Complete-data file: numbers separated by whitespace or commas, '#' comments.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "jpcw/errors.hpp"
#include "jpcw/gof.hpp"
#include "jpcw/sample.hpp"
#include "jpcw/study.hpp"

namespace jpcw {

namespace detail {

inline std::vector<std::string_view> split_tokens(std::string_view line, bool commas) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto sep = [commas](char c) { return c == ' ' || c == '\t' || c == '\r' || (commas && c == ','); };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

template <class T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw parse_error(line, std::string("expected ") + what + ", got '" + std::string(tok) + "'");
  return value;
}

struct Line {
  std::size_t number;
  std::vector<std::string_view> tokens;
};

inline std::vector<Line> content_lines(std::string_view text, bool commas) {
  std::vector<Line> out;
  std::size_t number = 0, start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string_view raw = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    ++number;
    auto toks = split_tokens(strip_comment(raw), commas);
    if (!toks.empty()) out.push_back({number, std::move(toks)});
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error(0, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline JpcSample parse_jpc(std::string_view text) {
  const auto lines = detail::content_lines(text, false);
  if (lines.empty()) throw parse_error(1, "empty sample file");

  const auto& head = lines[0];
  if (head.tokens.size() != 3) throw parse_error(head.number, "header must be 'm n k'");
  CensoringScheme scheme;
  scheme.m = detail::parse_number<std::size_t>(head.tokens[0], head.number, "m");
  scheme.n = detail::parse_number<std::size_t>(head.tokens[1], head.number, "n");
  const auto k = detail::parse_number<std::size_t>(head.tokens[2], head.number, "k");

  if (lines.size() < 2) throw parse_error(head.number + 1, "missing 'R:' line");
  const auto& rl = lines[1];
  if (rl.tokens.front() != "R:") throw parse_error(rl.number, "expected line starting with 'R:'");
  if (rl.tokens.size() != k + 1)
    throw parse_error(rl.number, "R line has " + std::to_string(rl.tokens.size() - 1) + " entries, header says k=" +
                                     std::to_string(k));
  for (std::size_t j = 1; j < rl.tokens.size(); ++j)
    scheme.R.push_back(detail::parse_number<std::size_t>(rl.tokens[j], rl.number, "non-negative integer R"));

  std::vector<JpcObservation> obs;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (obs.size() == k) throw parse_error(l.number, "more observation lines than k");
    if (l.tokens.size() != 3) throw parse_error(l.number, "observation must be 't delta s'");
    JpcObservation o;
    o.t = detail::parse_number<double>(l.tokens[0], l.number, "failure time");
    const auto delta = detail::parse_number<int>(l.tokens[1], l.number, "delta");
    if (delta != 0 && delta != 1) throw parse_error(l.number, "delta must be 0 or 1");
    o.from_group1 = delta == 1;
    o.s = detail::parse_number<std::size_t>(l.tokens[2], l.number, "non-negative integer s");
    obs.push_back(o);
  }
  if (obs.size() != k)
    throw parse_error(lines.back().number + 1,
                      "expected " + std::to_string(k) + " observations, found " + std::to_string(obs.size()));
  return JpcSample(std::move(scheme), std::move(obs));
}

inline JpcSample parse_jpc_file(const std::string& path) { return parse_jpc(detail::read_file(path)); }

/// Shortest decimal that reads back to the same double.
inline std::string format_exact(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string serialize_jpc(const JpcSample& sample) {
  std::string out = std::to_string(sample.m()) + ' ' + std::to_string(sample.n()) + ' ' +
                    std::to_string(sample.k()) + "\nR:";
  for (std::size_t r : sample.scheme().R) out += ' ' + std::to_string(r);
  out += '\n';
  for (const auto& o : sample.observations())
    out += format_exact(o.t) + (o.from_group1 ? " 1 " : " 0 ") + std::to_string(o.s) + '\n';
  return out;
}

inline void write_jpc_file(const std::string& path, const JpcSample& sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error(0, "cannot write '" + path + "'");
  out << serialize_jpc(sample);
}

inline std::vector<double> parse_values(std::string_view text) {
  std::vector<double> out;
  for (const auto& l : detail::content_lines(text, true))
    for (auto tok : l.tokens) out.push_back(detail::parse_number<double>(tok, l.number, "number"));
  if (out.empty()) throw parse_error(1, "no values in data file");
  return out;
}

inline CompleteSample parse_complete_file(const std::string& path, double shift = 0.0) {
  return CompleteSample(parse_values(detail::read_file(path)), shift);
}

// ---- study configuration as JSON ------------------------------------------

inline PriorSpec prior_from_json(const nlohmann::json& j, PriorSpec base) {
  base.bg.a0 = j.value("a0", base.bg.a0);
  base.bg.b0 = j.value("b0", base.bg.b0);
  base.bg.a1 = j.value("a1", base.bg.a1);
  base.bg.a2 = j.value("a2", base.bg.a2);
  base.shape.a = j.value("a", base.shape.a);
  base.shape.b = j.value("b", base.shape.b);
  return base;
}

inline nlohmann::json prior_to_json(const PriorSpec& p) {
  return {{"a0", p.bg.a0}, {"b0", p.bg.b0}, {"a1", p.bg.a1}, {"a2", p.bg.a2}, {"a", p.shape.a}, {"b", p.shape.b}};
}

/// Keys: scheme {m, n, R}, truth {alpha, lambda1, lambda2}, replications,
/// methods, prior_ip, prior_nip, level, n_posterior, b_bootstrap, base_seed,
/// threads. prior_ip defaults to the informative preset for truth.alpha.
inline StudyConfig study_config_from_json(const nlohmann::json& j) {
  try {
    StudyConfig c;
    const auto& s = j.at("scheme");
    c.scheme.m = s.at("m").get<std::size_t>();
    c.scheme.n = s.at("n").get<std::size_t>();
    c.scheme.R = s.at("R").get<std::vector<std::size_t>>();
    const auto& t = j.at("truth");
    c.truth = {t.at("alpha").get<double>(), t.at("lambda1").get<double>(), t.at("lambda2").get<double>()};
    c.replications = j.value("replications", c.replications);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.prior_ip = informative_preset(c.truth.alpha);
    if (j.contains("prior_ip")) c.prior_ip = prior_from_json(j.at("prior_ip"), c.prior_ip);
    if (j.contains("prior_nip")) c.prior_nip = prior_from_json(j.at("prior_nip"), c.prior_nip);
    c.level = j.value("level", c.level);
    c.n_posterior = j.value("n_posterior", c.n_posterior);
    c.b_bootstrap = j.value("b_bootstrap", c.b_bootstrap);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.threads = j.value("threads", c.threads);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(0, std::string("study config: ") + e.what());
  }
}

inline nlohmann::json study_config_to_json(const StudyConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  return {{"scheme", {{"m", c.scheme.m}, {"n", c.scheme.n}, {"R", c.scheme.R}}},
          {"truth", {{"alpha", c.truth.alpha}, {"lambda1", c.truth.lambda1}, {"lambda2", c.truth.lambda2}}},
          {"replications", c.replications},
          {"methods", methods},
          {"prior_ip", prior_to_json(c.prior_ip)},
          {"prior_nip", prior_to_json(c.prior_nip)},
          {"level", c.level},
          {"n_posterior", c.n_posterior},
          {"b_bootstrap", c.b_bootstrap},
          {"base_seed", c.base_seed},
          {"threads", c.threads}};
}

inline StudyConfig parse_study_config_file(const std::string& path) {
  const std::string text = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(0, std::string("study config: ") + e.what());
  }
  return study_config_from_json(j);
}

}  // namespace jpcw
