#pragma once

// Series families: the four perturbed factorial series plus the linear
// combination used for the independence criterion.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace psl {

/// sum [((n-1)!)^k x] / (n!)^k, specialising to zeta(k) at x = 1.
struct Zeta {
  int k = 2;
};

/// Vacca-type series sum (-1)^n [(n-1)! floor(log2 n) x] / n!.
struct EulerLog {};

/// sum [prod_{j<n} j^j x] / prod_{j<=n} j^j, specialising to sum n^-n.
struct Sophomore {};

/// sum [prod_{j<n} (j!+1) x] / prod_{j<=n} (j!+1), specialising to sum 1/(n!+1).
struct Erdos {};

/// Coefficients A_1..A_K; A_1 weights the alternating log component and
/// A_j (j >= 2) weights the power component with exponent j.
struct LinComb {
  int K = 1;
  std::vector<std::int64_t> A;

  std::int64_t coef(int j) const { return A.at(static_cast<std::size_t>(j - 1)); }
  bool all_zero() const {
    for (auto a : A)
      if (a != 0) return false;
    return true;
  }
};

using SeriesFamily = std::variant<Zeta, EulerLog, Sophomore, Erdos, LinComb>;

inline void validate(const SeriesFamily& family) {
  if (auto* z = std::get_if<Zeta>(&family); z && z->k < 2)
    throw std::invalid_argument("zeta family requires k >= 2");
  if (auto* l = std::get_if<LinComb>(&family)) {
    if (l->K < 1) throw std::invalid_argument("lincomb requires K >= 1");
    if (l->A.size() != static_cast<std::size_t>(l->K))
      throw std::invalid_argument("lincomb requires exactly K coefficients");
  }
}

inline std::string to_string(const SeriesFamily& family) {
  struct Visitor {
    std::string operator()(const Zeta& z) const { return "zeta:" + std::to_string(z.k); }
    std::string operator()(const EulerLog&) const { return "euler"; }
    std::string operator()(const Sophomore&) const { return "sophomore"; }
    std::string operator()(const Erdos&) const { return "erdos"; }
    std::string operator()(const LinComb& l) const {
      std::string s = "lincomb:" + std::to_string(l.K) + ":";
      for (std::size_t i = 0; i < l.A.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(l.A[i]);
      }
      return s;
    }
  };
  return std::visit(Visitor{}, family);
}

namespace detail {

inline std::int64_t parse_int(std::string_view text, const char* what) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw std::invalid_argument(std::string("malformed ") + what + ": '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace detail

/// Parses `zeta:K | euler | sophomore | erdos | lincomb:K:A1,..,AK`.
inline SeriesFamily parse_family(std::string_view text) {
  auto parts = detail::split(text, ':');
  const auto& head = parts[0];
  SeriesFamily family;
  if (head == "zeta" && parts.size() == 2) {
    family = Zeta{static_cast<int>(detail::parse_int(parts[1], "zeta exponent"))};
  } else if (head == "euler" && parts.size() == 1) {
    family = EulerLog{};
  } else if (head == "sophomore" && parts.size() == 1) {
    family = Sophomore{};
  } else if (head == "erdos" && parts.size() == 1) {
    family = Erdos{};
  } else if (head == "lincomb" && parts.size() == 3) {
    LinComb l;
    l.K = static_cast<int>(detail::parse_int(parts[1], "lincomb K"));
    for (auto a : detail::split(parts[2], ','))
      l.A.push_back(detail::parse_int(a, "lincomb coefficient"));
    family = l;
  } else {
    throw std::invalid_argument("unknown family '" + std::string(text) + "'");
  }
  validate(family);
  return family;
}

}  // namespace psl
