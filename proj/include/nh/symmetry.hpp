#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nh {

// Permutation of {0..n-1}; image[i] is the image of i. Printed 1-based in
// cycle notation.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> image);

  static Permutation identity(int degree);
  // Parses cycle notation such as "(1243)(5687)" or "(1 10 3)(2,4)".
  // Single-digit points may be written without separators. Throws
  // Error(InvalidPermutation) naming the offending token.
  static Permutation parse(std::string_view text, int degree);

  int degree() const noexcept { return static_cast<int>(image_.size()); }
  int operator[](int i) const noexcept { return image_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& image() const noexcept { return image_; }

  // (p * q)(i) = p(q(i)): q is applied first.
  Permutation operator*(const Permutation& q) const;
  Permutation inverse() const;
  bool is_identity() const noexcept;
  int fixed_points() const noexcept;
  int order() const;
  std::string to_cycles() const;

  // Matrix of the coordinate action (rho(s) x)_i = x_{s(i)}.
  Eigen::MatrixXd matrix() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> image_;
};

struct PermGroup {
  int degree = 0;
  std::vector<Permutation> generators;
  // Identity first, then breadth-first order of discovery.
  std::vector<Permutation> elements;

  std::size_t order() const noexcept { return elements.size(); }
  // Index into `elements`, or -1.
  std::ptrdiff_t index_of(const Permutation& p) const;
};

inline constexpr std::size_t kDefaultGroupCap = 1'000'000;

PermGroup generate_group(const std::vector<Permutation>& generators, int degree,
                         std::size_t max_order = kDefaultGroupCap);

struct ConjugacyClass {
  Permutation representative;
  std::vector<std::size_t> members;  // indices into PermGroup::elements
  std::size_t size() const noexcept { return members.size(); }
};

std::vector<ConjugacyClass> conjugacy_classes(const PermGroup& group);

// Number of fixed coordinates of each class representative.
std::vector<double> permutation_character(const std::vector<ConjugacyClass>& classes);

// Character table as supplied by the user, keyed by class representatives.
struct CharacterTableInput {
  std::vector<std::string> class_keys;             // cycle notation
  std::vector<std::vector<double>> characters;     // one row per irreducible
  std::vector<std::string> names;                  // optional row names
};

struct CharacterTable {
  std::vector<Permutation> class_reps;
  std::vector<std::size_t> class_sizes;
  std::vector<std::vector<double>> chars;  // chars[i][c]
  std::vector<int> dims;                   // chars[i][identity class]
  std::vector<std::string> names;
  // class_of[e] is the column of element e of the group.
  std::vector<std::size_t> class_of;
};

// Parses a rational such as "-1", "1/2" or "3".
double parse_rational(std::string_view text);

// Aligns `input` with the computed classes of `group`. Throws
// Error(InvalidPermutation) for unknown keys and Error(NonOrthogonalTable)
// when rows are not orthonormal to 1e-10.
CharacterTable make_character_table(const PermGroup& group,
                                    const std::vector<ConjugacyClass>& classes,
                                    const CharacterTableInput& input);

// Trivial-group table, the only one synthesized automatically.
CharacterTableInput trivial_table_input();

struct IsotypicProjector {
  int j = 0;          // row of the character table
  int irrep_dim = 0;  // chi_j(1)
  int dim = 0;        // rounded trace of P_j
  Eigen::MatrixXd matrix;
};

std::vector<IsotypicProjector> isotypic_projectors(const PermGroup& group,
                                                   const CharacterTable& table);

struct EigenCluster {
  double mu = 0.0;
  int dim = 0;           // dimension of the eigenspace inside the component
  int multiplicity = 0;  // dim / irrep_dim
};

struct IsotypicComponent {
  int j = 0;
  int irrep_dim = 0;
  int dim = 0;
  Eigen::MatrixXd projector;
  Eigen::MatrixXd basis;  // orthonormal columns spanning image(P_j)
  bool single_eigenvalue = true;
  std::vector<EigenCluster> eigenvalues;  // ascending; size 1 when single
  // Valid when single_eigenvalue; first cluster otherwise.
  double mu = 0.0;
  int multiplicity = 0;
  double a_j = 0.0;
};

// Max entrywise |rho(g) C - C rho(g)| over the generators.
double equivariance_check(const Eigen::MatrixXd& coupling, const PermGroup& group);

// Components for every projector with nonzero trace. Throws
// Error(EquivarianceViolation) when C does not commute with the group to
// 1e-10. Blocks on which C has more than one eigenvalue are returned with
// single_eigenvalue = false.
std::vector<IsotypicComponent> decompose_coupling(
    const Eigen::MatrixXd& coupling, const PermGroup& group,
    const std::vector<IsotypicProjector>& projectors, double a);

// Rotation group of the cube acting on its 8 vertices.
namespace cube {

std::vector<Permutation> generators();
// Table of S4 with columns (1), (12), (12)(34), (123), (1234), keyed by
// the matching vertex permutations.
CharacterTableInput character_table();

struct OrbitData {
  int j = 0;
  std::string basic_degree;
  std::vector<std::string> maximal_orbit_types;
};

// Twisted basic degrees and maximal orbit types per component (report only).
std::optional<OrbitData> orbit_data(int j);

}  // namespace cube

}  // namespace nh
