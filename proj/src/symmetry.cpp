#include "nh/symmetry.hpp"

#include "nh/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <sstream>

namespace nh {

namespace {

bool is_permutation_image(const std::vector<int>& image) {
  std::vector<char> seen(image.size(), 0);
  for (int v : image) {
    if (v < 0 || v >= static_cast<int>(image.size()) || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

[[noreturn]] void bad_permutation(std::string_view token, const std::string& why) {
  throw Error(ErrorCode::InvalidPermutation,
              "invalid permutation \"" + std::string(token) + "\": " + why);
}

}  // namespace

Permutation::Permutation(std::vector<int> image) : image_(std::move(image)) {
  if (!is_permutation_image(image_)) {
    throw Error(ErrorCode::InvalidPermutation, "image list is not a bijection");
  }
}

Permutation Permutation::identity(int degree) {
  std::vector<int> image(static_cast<std::size_t>(degree));
  std::iota(image.begin(), image.end(), 0);
  return Permutation(std::move(image));
}

Permutation Permutation::parse(std::string_view text, int degree) {
  std::vector<int> image(static_cast<std::size_t>(degree));
  std::iota(image.begin(), image.end(), 0);
  std::vector<char> used(static_cast<std::size_t>(degree), 0);

  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  skip_space();
  while (pos < text.size()) {
    if (text[pos] != '(') bad_permutation(text, "expected '('");
    const std::size_t close = text.find(')', pos);
    if (close == std::string_view::npos) bad_permutation(text, "unbalanced '('");
    const std::string_view body = text.substr(pos + 1, close - pos - 1);
    pos = close + 1;
    skip_space();

    std::vector<int> cycle;
    const bool separated = body.find_first_of(", ") != std::string_view::npos;
    if (separated) {
      std::string token;
      std::string normalized(body);
      std::replace(normalized.begin(), normalized.end(), ',', ' ');
      std::istringstream words(normalized);
      while (words >> token) {
        if (!std::all_of(token.begin(), token.end(),
                         [](unsigned char c) { return std::isdigit(c); })) {
          bad_permutation(text, "non-numeric point '" + token + "'");
        }
        cycle.push_back(std::stoi(token));
      }
    } else {
      for (char c : body) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
          bad_permutation(text, std::string("non-numeric point '") + c + "'");
        }
        cycle.push_back(c - '0');
      }
    }
    for (int& p : cycle) {
      if (p < 1 || p > degree) {
        bad_permutation(text, "point " + std::to_string(p) + " outside 1.." +
                                  std::to_string(degree));
      }
      --p;
      if (used[p]) bad_permutation(text, "point " + std::to_string(p + 1) + " repeated");
      used[p] = 1;
    }
    for (std::size_t k = 0; k < cycle.size(); ++k)
      image[cycle[k]] = cycle[(k + 1) % cycle.size()];
  }
  return Permutation(std::move(image));
}

Permutation Permutation::operator*(const Permutation& q) const {
  std::vector<int> out(image_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image_[q.image_[i]];
  Permutation r;
  r.image_ = std::move(out);
  return r;
}

Permutation Permutation::inverse() const {
  std::vector<int> out(image_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[image_[i]] = static_cast<int>(i);
  Permutation r;
  r.image_ = std::move(out);
  return r;
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < image_.size(); ++i)
    if (image_[i] != static_cast<int>(i)) return false;
  return true;
}

int Permutation::fixed_points() const noexcept {
  int count = 0;
  for (std::size_t i = 0; i < image_.size(); ++i)
    if (image_[i] == static_cast<int>(i)) ++count;
  return count;
}

int Permutation::order() const {
  int result = 1;
  std::vector<char> seen(image_.size(), 0);
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (int k = static_cast<int>(i); !seen[k]; k = image_[k]) {
      seen[k] = 1;
      ++len;
    }
    result = std::lcm(result, len);
  }
  return result;
}

std::string Permutation::to_cycles() const {
  std::string out;
  const bool wide = image_.size() > 9;
  std::vector<char> seen(image_.size(), 0);
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (seen[i] || image_[i] == static_cast<int>(i)) continue;
    out += '(';
    bool first = true;
    for (int k = static_cast<int>(i); !seen[k]; k = image_[k]) {
      seen[k] = 1;
      if (wide && !first) out += ',';
      out += std::to_string(k + 1);
      first = false;
    }
    out += ')';
  }
  return out.empty() ? "()" : out;
}

Eigen::MatrixXd Permutation::matrix() const {
  const int n = degree();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, image_[i]) = 1.0;
  return m;
}

std::ptrdiff_t PermGroup::index_of(const Permutation& p) const {
  auto it = std::find(elements.begin(), elements.end(), p);
  return it == elements.end() ? -1 : std::distance(elements.begin(), it);
}

PermGroup generate_group(const std::vector<Permutation>& generators, int degree,
                         std::size_t max_order) {
  if (degree < 1) {
    throw Error(ErrorCode::InvalidPermutation, "group degree must be >= 1");
  }
  for (const auto& g : generators) {
    if (g.degree() != degree) {
      throw Error(ErrorCode::InvalidPermutation,
                  "generator " + g.to_cycles() + " has degree " +
                      std::to_string(g.degree()) + ", expected " +
                      std::to_string(degree));
    }
  }
  PermGroup group;
  group.degree = degree;
  group.generators = generators;

  std::map<Permutation, std::size_t> seen;
  const Permutation id = Permutation::identity(degree);
  group.elements.push_back(id);
  seen.emplace(id, 0);
  std::deque<std::size_t> frontier{0};
  while (!frontier.empty()) {
    const std::size_t current = frontier.front();
    frontier.pop_front();
    for (const auto& g : generators) {
      Permutation next = g * group.elements[current];
      if (seen.contains(next)) continue;
      if (group.elements.size() >= max_order) {
        throw Error(ErrorCode::GroupTooLarge,
                    "group order exceeds cap " + std::to_string(max_order));
      }
      seen.emplace(next, group.elements.size());
      frontier.push_back(group.elements.size());
      group.elements.push_back(std::move(next));
    }
  }
  return group;
}

std::vector<ConjugacyClass> conjugacy_classes(const PermGroup& group) {
  std::map<Permutation, std::size_t> index;
  for (std::size_t e = 0; e < group.elements.size(); ++e) index.emplace(group.elements[e], e);

  std::vector<ConjugacyClass> classes;
  std::vector<char> assigned(group.elements.size(), 0);
  for (std::size_t e = 0; e < group.elements.size(); ++e) {
    if (assigned[e]) continue;
    ConjugacyClass cls;
    cls.representative = group.elements[e];
    for (const auto& h : group.elements) {
      const std::size_t k = index.at(h * group.elements[e] * h.inverse());
      if (!assigned[k]) {
        assigned[k] = 1;
        cls.members.push_back(k);
      }
    }
    std::sort(cls.members.begin(), cls.members.end());
    classes.push_back(std::move(cls));
  }
  return classes;
}

std::vector<double> permutation_character(const std::vector<ConjugacyClass>& classes) {
  std::vector<double> chi;
  chi.reserve(classes.size());
  for (const auto& c : classes) chi.push_back(c.representative.fixed_points());
  return chi;
}

double parse_rational(std::string_view text) {
  const std::string s(text);
  try {
    std::size_t used = 0;
    const auto slash = s.find('/');
    if (slash == std::string::npos) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    }
    const std::string num = s.substr(0, slash);
    const std::string den = s.substr(slash + 1);
    const double p = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument(s);
    const double q = std::stod(den, &used);
    if (used != den.size() || q == 0.0) throw std::invalid_argument(s);
    return p / q;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Parse, "invalid rational \"" + s + "\"");
  }
}

CharacterTable make_character_table(const PermGroup& group,
                                    const std::vector<ConjugacyClass>& classes,
                                    const CharacterTableInput& input) {
  const std::size_t k = classes.size();
  if (input.class_keys.size() != k) {
    throw Error(ErrorCode::NonOrthogonalTable,
                "character table has " + std::to_string(input.class_keys.size()) +
                    " columns but the group has " + std::to_string(k) + " classes");
  }
  std::vector<std::size_t> class_of_element(group.order(), 0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t e : classes[c].members) class_of_element[e] = c;

  // column_for_class[c] = column of the input table describing class c.
  std::vector<std::ptrdiff_t> column_for_class(k, -1);
  for (std::size_t col = 0; col < k; ++col) {
    const Permutation rep = Permutation::parse(input.class_keys[col], group.degree);
    const std::ptrdiff_t e = group.index_of(rep);
    if (e < 0) {
      throw Error(ErrorCode::InvalidPermutation,
                  "class key \"" + input.class_keys[col] + "\" is not a group element");
    }
    const std::size_t c = class_of_element[static_cast<std::size_t>(e)];
    if (column_for_class[c] >= 0) {
      throw Error(ErrorCode::NonOrthogonalTable,
                  "class keys \"" + input.class_keys[column_for_class[c]] + "\" and \"" +
                      input.class_keys[col] + "\" are conjugate");
    }
    column_for_class[c] = static_cast<std::ptrdiff_t>(col);
  }

  CharacterTable table;
  table.class_of = std::move(class_of_element);
  for (std::size_t c = 0; c < k; ++c) {
    table.class_reps.push_back(classes[c].representative);
    table.class_sizes.push_back(classes[c].size());
  }
  const std::size_t id_class = table.class_of[0];
  for (std::size_t i = 0; i < input.characters.size(); ++i) {
    const auto& row = input.characters[i];
    if (row.size() != k) {
      throw Error(ErrorCode::NonOrthogonalTable,
                  "character row " + std::to_string(i) + " has " +
                      std::to_string(row.size()) + " entries, expected " +
                      std::to_string(k));
    }
    std::vector<double> aligned(k);
    for (std::size_t c = 0; c < k; ++c) aligned[c] = row[column_for_class[c]];
    const double d = aligned[id_class];
    if (std::abs(d - std::round(d)) > 1e-6 || std::round(d) < 1) {
      throw Error(ErrorCode::NonOrthogonalTable,
                  "character row " + std::to_string(i) + " has non-integer degree");
    }
    table.dims.push_back(static_cast<int>(std::lround(d)));
    table.chars.push_back(std::move(aligned));
    table.names.push_back(i < input.names.size() ? input.names[i]
                                                 : "chi" + std::to_string(i));
  }

  const double order = static_cast<double>(group.order());
  for (std::size_t i = 0; i < table.chars.size(); ++i) {
    for (std::size_t m = 0; m < table.chars.size(); ++m) {
      double inner = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        inner += table.class_sizes[c] * table.chars[i][c] * table.chars[m][c];
      inner /= order;
      const double expected = i == m ? 1.0 : 0.0;
      if (std::abs(inner - expected) > 1e-10) {
        std::ostringstream os;
        os.precision(17);
        os << "rows " << i << " and " << m << " have inner product " << inner;
        throw Error(ErrorCode::NonOrthogonalTable, os.str());
      }
    }
  }
  return table;
}

CharacterTableInput trivial_table_input() {
  return {{"()"}, {{1.0}}, {"chi0"}};
}

namespace {

int rounded_dimension(double trace, const std::string& what) {
  const double r = std::round(trace);
  if (std::abs(trace - r) > 1e-6) {
    std::ostringstream os;
    os.precision(17);
    os << what << " = " << trace << " is not an integer";
    throw Error(ErrorCode::InvariantViolation, os.str());
  }
  return static_cast<int>(r);
}

}  // namespace

std::vector<IsotypicProjector> isotypic_projectors(const PermGroup& group,
                                                   const CharacterTable& table) {
  const int n = group.degree;
  const double order = static_cast<double>(group.order());
  std::vector<IsotypicProjector> out;
  for (std::size_t j = 0; j < table.chars.size(); ++j) {
    IsotypicProjector p;
    p.j = static_cast<int>(j);
    p.irrep_dim = table.dims[j];
    p.matrix = Eigen::MatrixXd::Zero(n, n);
    const double scale = table.dims[j] / order;
    for (std::size_t e = 0; e < group.order(); ++e) {
      const double w = scale * table.chars[j][table.class_of[e]];
      const auto& g = group.elements[e];
      for (int i = 0; i < n; ++i) p.matrix(i, g[i]) += w;
    }
    p.dim = rounded_dimension(p.matrix.trace(), "trace of projector " + std::to_string(j));
    out.push_back(std::move(p));
  }
  return out;
}

double equivariance_check(const Eigen::MatrixXd& coupling, const PermGroup& group) {
  if (coupling.rows() != group.degree || coupling.cols() != group.degree) {
    throw Error(ErrorCode::DimensionMismatch,
                "coupling is " + std::to_string(coupling.rows()) + "x" +
                    std::to_string(coupling.cols()) + ", group degree is " +
                    std::to_string(group.degree));
  }
  double defect = 0.0;
  for (const auto& g : group.generators) {
    const Eigen::MatrixXd r = g.matrix();
    defect = std::max(defect, (r * coupling - coupling * r).cwiseAbs().maxCoeff());
  }
  return defect;
}

std::vector<IsotypicComponent> decompose_coupling(
    const Eigen::MatrixXd& coupling, const PermGroup& group,
    const std::vector<IsotypicProjector>& projectors, double a) {
  const double defect = equivariance_check(coupling, group);
  if (defect > 1e-10) {
    std::ostringstream os;
    os.precision(17);
    os << "coupling does not commute with the group (defect " << defect << ")";
    throw Error(ErrorCode::EquivarianceViolation, os.str());
  }

  std::vector<IsotypicComponent> out;
  for (const auto& p : projectors) {
    if (p.dim == 0) continue;
    IsotypicComponent comp;
    comp.j = p.j;
    comp.irrep_dim = p.irrep_dim;
    comp.dim = p.dim;
    comp.projector = p.matrix;

    const Eigen::MatrixXd sym = 0.5 * (p.matrix + p.matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> image(sym);
    const Eigen::MatrixXd range = image.eigenvectors().rightCols(p.dim);

    const Eigen::MatrixXd restricted = range.transpose() * coupling * range;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> block(
        0.5 * (restricted + restricted.transpose()));
    comp.basis = range * block.eigenvectors();

    const Eigen::VectorXd& evals = block.eigenvalues();
    std::size_t start = 0;
    for (Eigen::Index k = 1; k <= evals.size(); ++k) {
      if (k == evals.size() || evals[k] - evals[k - 1] > 1e-8) {
        EigenCluster cluster;
        cluster.dim = static_cast<int>(k - start);
        cluster.mu = evals.segment(start, cluster.dim).mean();
        cluster.multiplicity = rounded_dimension(
            static_cast<double>(cluster.dim) / comp.irrep_dim,
            "multiplicity of eigenvalue on component " + std::to_string(p.j));
        comp.eigenvalues.push_back(cluster);
        start = static_cast<std::size_t>(k);
      }
    }
    comp.single_eigenvalue = comp.eigenvalues.size() == 1;
    comp.mu = comp.eigenvalues.front().mu;
    comp.multiplicity = comp.eigenvalues.front().multiplicity;
    comp.a_j = a + comp.mu;
    out.push_back(std::move(comp));
  }
  return out;
}

namespace cube {

std::vector<Permutation> generators() {
  return {Permutation::parse("(1243)(5687)", 8), Permutation::parse("(283)(167)", 8),
          Permutation::parse("(18)(27)(34)(56)", 8)};
}

CharacterTableInput character_table() {
  CharacterTableInput t;
  t.class_keys = {"()", "(18)(27)(34)(56)", "(14)(23)(58)(67)", "(283)(167)",
                  "(1243)(5687)"};
  t.characters = {
      {1, 1, 1, 1, 1},
      {1, -1, 1, 1, -1},
      {2, 0, 2, -1, 0},
      // chi3 and chi4 are listed so that V3 holds the parity-times-coordinate
      // eigenvectors and V4 the coordinate ones.
      {3, 1, -1, 0, -1},
      {3, -1, -1, 0, 1},
  };
  t.names = {"chi0", "chi1", "chi2", "chi3", "chi4"};
  return t;
}

std::optional<OrbitData> orbit_data(int j) {
  const std::string z2m = "{\\mathbb Z}_{2m} {}^{{\\mathbb Z}_m}\\times ";
  const std::string tail3 =
      "({\\mathbb Z}_{4m} {}^{{\\mathbb Z}_m}\\times {}^{{\\mathbb Z}_2^-} {\\mathbb Z}_4^p)";
  const std::string tail6 = "({\\mathbb Z}_{6m} {}^{{\\mathbb Z}_m}\\times {\\mathbb Z}_3^p)";
  auto t = [&](const std::string& body) { return "(" + z2m + body + ")"; };
  switch (j) {
    case 0:
      return OrbitData{0, "-" + t("{}^{S_4} S_4^p"), {t("{}^{S_4} S_4^p")}};
    case 1:
      return OrbitData{1, "-" + t("{}^{S_4^-} S_4^p"), {t("{}^{S_4^-} S_4^p")}};
    case 3: {
      std::vector<std::string> m = {t("{}^{D_4^z} D_4^p"), t("{}^{D_3^z} D_3^p"),
                                    t("{}^{D_2^d} D_2^p"), tail3, tail6};
      std::string deg = m[0] + " + " + m[1] + " + " + m[2] + " + " + tail3 + " + " +
                        tail6 + " - " + t("{}^{{\\mathbb Z}_2^-} D_2^p") + " - " +
                        t("{}^{D_1^z} D_1^p");
      return OrbitData{3, deg, m};
    }
    case 4: {
      std::vector<std::string> m = {t("{}^{D_4^d} D_4^p"), t("{}^{D_3} D_3^p"),
                                    t("{}^{D_2^d} D_2^p"), tail3, tail6};
      std::string deg = m[0] + " + " + m[1] + " + " + m[2] + " + " + tail3 + " + " +
                        tail6 + " - " + t("{}^{{\\mathbb Z}_2^-} D_2^p") + " - " +
                        t("{}^{D_1} D_1^p");
      return OrbitData{4, deg, m};
    }
    default:
      return std::nullopt;
  }
}

}  // namespace cube

}  // namespace nh
