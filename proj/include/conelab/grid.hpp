#pragma once
// Uniform one-dimensional grids, sampled functions, intervals and the scalar
// norms built on midpoint quadrature.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conelab {

enum class DomainMode { TruncatedLine, PeriodicTorus };

std::string to_string(DomainMode mode);
DomainMode parse_domain_mode(const std::string& text);

struct Domain {
    DomainMode mode = DomainMode::TruncatedLine;
    double left = -4.0;
    double right = 4.0;
    std::size_t n = 1024;

    // Validates n = 2^K with K >= 3 and left < right.
    static Domain make(DomainMode mode, double left, double right, std::size_t n);
    static Domain line(double left, double right, std::size_t n) {
        return make(DomainMode::TruncatedLine, left, right, n);
    }
    static Domain torus(double left, double right, std::size_t n) {
        return make(DomainMode::PeriodicTorus, left, right, n);
    }

    double length() const { return right - left; }
    double h() const { return (right - left) / static_cast<double>(n); }
    double x(std::size_t i) const { return left + (static_cast<double>(i) + 0.5) * h(); }
    bool periodic() const { return mode == DomainMode::PeriodicTorus; }
    int levels() const;  // K with n = 2^K
    // Cell containing the point (wrapped on the torus, clamped on the line).
    std::size_t cell_of(double x) const;

    bool operator==(const Domain& other) const = default;
};

struct GridFunction {
    Domain domain;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(Domain d, std::vector<double> v);
    static GridFunction zeros(const Domain& d);
    static GridFunction constant(const Domain& d, double c);
    static GridFunction sample(const Domain& d, const std::function<double(double)>& fn);

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    const double* data() const { return values.data(); }
    double x(std::size_t i) const { return domain.x(i); }

    GridFunction abs() const;
    GridFunction pow(double r) const;  // |f|^r
    GridFunction scaled(double c) const;
    GridFunction times(const GridFunction& other) const;
    double max_abs() const;
};

// A weight is a GridFunction with strictly positive entries.
using Weight = GridFunction;
void require_weight(const GridFunction& w, const std::string& what = "weight");

struct Cube {
    double center = 0.0;
    double side = 1.0;

    static Cube from_endpoints(double a, double b);
    double left() const { return center - 0.5 * side; }
    double right() const { return center + 0.5 * side; }
    Cube dilate(double factor) const { return Cube{center, side * factor}; }
};

// A run of consecutive cells [lo, lo + len), wrapping modulo n on the torus.
struct CellRange {
    std::size_t lo = 0;
    std::size_t len = 0;

    std::size_t at(std::size_t k, std::size_t n) const { return (lo + k) % n; }
    bool contains(std::size_t cell, std::size_t n) const { return ((cell + n - lo) % n) < len; }
    bool operator==(const CellRange& other) const = default;
};

// Cells touched by a cube with their overlap measured in cell units.
std::vector<std::pair<std::size_t, double>> cube_overlaps(const Domain& d, const Cube& q);
// Cell-aligned range of a cube; the cube must be aligned with the grid.
CellRange aligned_cells(const Domain& d, const Cube& q);
Cube cube_of(const Domain& d, const CellRange& r);

double average(const GridFunction& f, const Cube& q);
double average_abs(const GridFunction& f, const Cube& q);

double lp_norm(const GridFunction& f, double p, const GridFunction* w = nullptr);
double weak_lp_norm(const GridFunction& f, double p, const GridFunction* w = nullptr);
double lorentz_p1_norm(const GridFunction& f, double p, const GridFunction* mu = nullptr);
// w(E) for E given by a cell mask; w = nullptr is Lebesgue measure.
double measure(const Domain& d, const std::vector<char>& mask, const GridFunction* w = nullptr);
double integral(const GridFunction& f);

// Prefix sums over a cell array; range sums handle torus wrap.
class PrefixSum {
public:
    PrefixSum() = default;
    explicit PrefixSum(const std::vector<double>& values);
    double sum(const CellRange& r) const;
    double total() const { return prefix_.back(); }
    std::size_t size() const { return prefix_.size() - 1; }

private:
    std::vector<double> prefix_{0.0};
};

// 17 significant digits; metadata lines are written as "# ..." comments.
void write_csv(std::ostream& out, const GridFunction& f, const std::vector<std::string>& metadata = {});
GridFunction read_csv(std::istream& in, std::optional<Domain> domain = std::nullopt);

}  // namespace conelab
