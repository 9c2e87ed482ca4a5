#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "slowfast/spectral.hpp"

namespace slowfast {

enum class NonlinearityKind { Zero, LinearCoupling, SineSaturating, ThermoelasticSine, UserTable };
enum class Role { Slow, Fast };  // output lands in H1 (F) or H2 (G)
enum class Slot { X, Y };
enum class Activation { Sin, Linear };

NonlinearityKind parse_nonlinearity_kind(const std::string& tag);
std::string to_string(NonlinearityKind kind);

// out[index] += amplitude * act(sum_k weight_k * z_{slot_k}[index_k])
struct TableTerm {
  struct Input {
    Slot slot = Slot::X;
    int index = 0;
    double weight = 1.0;
  };
  int out_index = 0;
  double amplitude = 1.0;
  Activation activation = Activation::Sin;
  std::vector<Input> inputs;
};

// F (role Slow) or G (role Fast). The Lipschitz constant is with respect to
// the product norm ||x|| + ||y||.
class Nonlinearity {
 public:
  Nonlinearity() = default;

  static Nonlinearity zero(Role role);
  // F: out_i = ell * y_i, G: out_i = ell * x_i for i < min(dim x, dim y).
  static Nonlinearity linear_coupling(Role role, double ell);
  // Componentwise a*sin on the output space's own coordinates.
  static Nonlinearity sine_saturating(Role role, double a, double declared_lipschitz);
  // Per mode k: s = x_disp(k) + x_vel(k) + y_k; F writes a*sin(s) to the velocity
  // slot, G writes a*sin(s) to y_k. Needs a slow layout of 2x2 blocks.
  static Nonlinearity thermoelastic_sine(Role role, double a);
  static Nonlinearity user_table(Role role, std::vector<TableTerm> terms, double declared_lipschitz);

  // Sizes and index bounds are checked once against the spaces.
  void bind(const SpaceSpec& slow, const SpaceSpec& fast);

  void eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
            Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  NonlinearityKind kind() const { return kind_; }
  Role role() const { return role_; }
  double declared_lipschitz() const { return lipschitz_; }
  double amplitude() const { return amplitude_; }
  const std::vector<TableTerm>& terms() const { return terms_; }

 private:
  NonlinearityKind kind_ = NonlinearityKind::Zero;
  Role role_ = Role::Slow;
  double amplitude_ = 0.0;
  double lipschitz_ = 0.0;
  std::vector<TableTerm> terms_;
  std::vector<int> disp_;  // slow displacement index per coupled mode
  std::vector<int> vel_;   // slow velocity index per coupled mode
  int out_dim_ = 0;
};

enum class ObservationKind { SineOfSlow, BoundedLinear, UserTable };

ObservationKind parse_observation_kind(const std::string& tag);
std::string to_string(ObservationKind kind);

// h : H1 x H2 -> H3 (truncated to dim3 modes).
class ObservationModel {
 public:
  ObservationModel() = default;

  // h_i = sin(x_disp(i)).
  static ObservationModel sine_of_slow(int dim3);
  // h_i = clamp(a * x_disp(i), -clip, clip).
  static ObservationModel bounded_linear(int dim3, double a, double clip);
  static ObservationModel user_table(int dim3, std::vector<TableTerm> terms, double c_h, double h_lip);

  void bind(const SpaceSpec& slow, const SpaceSpec& fast);

  void eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
            Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  ObservationKind kind() const { return kind_; }
  int dim3() const { return dim3_; }
  double c_h() const { return c_h_; }
  double h_lip() const { return h_lip_; }
  double slope() const { return slope_; }
  double clip() const { return clip_; }
  const std::vector<int>& observed_indices() const { return disp_; }
  const std::vector<TableTerm>& terms() const { return terms_; }
  bool is_zero() const { return kind_ == ObservationKind::UserTable && terms_.empty(); }

 private:
  ObservationKind kind_ = ObservationKind::SineOfSlow;
  int dim3_ = 0;
  double slope_ = 1.0;
  double clip_ = 1.0;
  double c_h_ = 0.0;
  double h_lip_ = 0.0;
  std::vector<TableTerm> terms_;
  std::vector<int> disp_;
};

// Index of the displacement coordinate of each slow mode block.
std::vector<int> displacement_indices(const SpaceSpec& slow);

}  // namespace slowfast
