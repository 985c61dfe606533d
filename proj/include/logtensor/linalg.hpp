#pragma once

#include <map>
#include <vector>

#include "logtensor/scalar.hpp"

namespace logtensor {

// Sparse vector over Scalar, indexed by basis position.  Zero entries are
// never stored; layer mixing inside entries surfaces through Scalar ops.
class Vec {
  public:
    Vec() = default;
    static Vec unit(int idx) { Vec v; v.e_[idx] = Scalar(Rational(1)); return v; }

    bool is_zero() const { return e_.empty(); }
    const std::map<int, Scalar>& entries() const { return e_; }
    Scalar at(int idx) const;
    void set(int idx, const Scalar& s);

    Vec& operator+=(const Vec& o);
    Vec& operator-=(const Vec& o);
    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    Vec operator-() const;
    Vec scaled(const Scalar& s) const;

    friend bool operator==(const Vec& a, const Vec& b) { return a.e_ == b.e_; }
    friend bool operator!=(const Vec& a, const Vec& b) { return !(a == b); }
    // Strict weak order so Vec can key std::map (used for dedup in tests).
    friend bool operator<(const Vec& a, const Vec& b);

    static bool approx_equal(const Vec& a, const Vec& b, double tol);
    double max_abs() const;

    std::string str() const;

  private:
    std::map<int, Scalar> e_;
};

// dst += c * src entry by entry, promoting across scalar layers where the
// two sides disagree (see mul_mixed/add_mixed).
void axpy_mixed(Vec& dst, const Scalar& c, const Vec& src);

// Dense matrix over Scalar.  Sized for desk-scale weight spaces; exact
// elimination requires invertible (zeta-degree-0) pivots and reports
// anything else as a domain error instead of limping on.
class Mat {
  public:
    Mat() : rows_(0), cols_(0) {}
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols) {}
    static Mat identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const Scalar& at(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
    Scalar& at(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

    bool is_zero() const;
    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(const Mat& a, const Mat& b);
    Mat scaled(const Scalar& s) const;
    Mat transposed() const;
    friend bool operator==(const Mat& a, const Mat& b);

    Vec apply(const Vec& v) const;   // matrix * column vector

    int rank() const;
    // Basis of the null space as dense columns.
    std::vector<std::vector<Scalar>> kernel() const;

  private:
    int rows_, cols_;
    std::vector<Scalar> a_;
};

// Incremental row-reduced span of dense vectors; used for closure discovery
// and dimension counting.  Insertion keeps the reduced form, so membership
// tests are a single reduction pass.
class RowSpan {
  public:
    explicit RowSpan(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(rows_.size()); }
    const std::vector<std::vector<Scalar>>& rows() const { return rows_; }

    // Reduces v against the span; returns true (and absorbs the remainder)
    // if v was independent.
    bool add(std::vector<Scalar> v);
    bool contains(std::vector<Scalar> v) const;

  private:
    void reduce(std::vector<Scalar>& v) const;
    int dim_;
    std::vector<std::vector<Scalar>> rows_;  // each has an invertible leading pivot
    std::vector<int> pivots_;
};

} // namespace logtensor
