#include "logtensor/linalg.hpp"

#include <algorithm>
#include <sstream>

namespace logtensor {

Scalar Vec::at(int idx) const {
    auto it = e_.find(idx);
    return it == e_.end() ? Scalar() : it->second;
}

void Vec::set(int idx, const Scalar& s) {
    if (s.is_zero()) {
        e_.erase(idx);
    } else {
        e_[idx] = s;
    }
}

Vec& Vec::operator+=(const Vec& o) {
    for (const auto& [i, s] : o.e_) {
        auto it = e_.find(i);
        if (it == e_.end()) {
            e_.emplace(i, s);
        } else {
            it->second += s;
            if (it->second.is_zero()) e_.erase(it);
        }
    }
    return *this;
}

Vec& Vec::operator-=(const Vec& o) { return *this += -o; }

Vec Vec::operator-() const {
    Vec r;
    for (const auto& [i, s] : e_) r.e_.emplace(i, -s);
    return r;
}

Vec Vec::scaled(const Scalar& s) const {
    Vec r;
    if (s.is_zero()) return r;
    for (const auto& [i, v] : e_) {
        Scalar p = v * s;
        if (!p.is_zero()) r.e_.emplace(i, p);
    }
    return r;
}

bool operator<(const Vec& a, const Vec& b) {
    auto ia = a.e_.begin(), ib = b.e_.begin();
    for (; ia != a.e_.end() && ib != b.e_.end(); ++ia, ++ib) {
        if (ia->first != ib->first) return ia->first < ib->first;
        if (!(ia->second == ib->second)) return ia->second.str() < ib->second.str();
    }
    return ib != b.e_.end();
}

bool Vec::approx_equal(const Vec& a, const Vec& b, double tol) {
    // Entry-wise through Scalar::approx_equal, which bridges the exact and
    // complex layers itself; subtracting first would refuse mixed layers.
    for (const auto& [i, s] : a.e_)
        if (!Scalar::approx_equal(s, b.at(i), tol)) return false;
    for (const auto& [i, s] : b.e_)
        if (a.e_.find(i) == a.e_.end() && !Scalar::approx_equal(Scalar(), s, tol)) return false;
    return true;
}

double Vec::max_abs() const {
    double m = 0.0;
    for (const auto& [i, s] : e_) m = std::max(m, s.abs());
    return m;
}

void axpy_mixed(Vec& dst, const Scalar& c, const Vec& src) {
    if (c.is_zero()) return;
    for (const auto& [i, s] : src.entries()) dst.set(i, add_mixed(dst.at(i), mul_mixed(c, s)));
}

std::string Vec::str() const {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& [i, s] : e_) {
        if (!first) os << ", ";
        first = false;
        os << i << ": " << s.str();
    }
    os << "}";
    return os.str();
}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = Scalar(Rational(1));
    return m;
}

bool Mat::is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](const Scalar& s) { return s.is_zero(); });
}

Mat& Mat::operator+=(const Mat& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw CalcError("matrix shape mismatch in add");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw CalcError("matrix shape mismatch in sub");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols_ != b.rows_) throw CalcError("matrix shape mismatch in mul");
    Mat r(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
        for (int k = 0; k < a.cols_; ++k) {
            const Scalar& s = a.at(i, k);
            if (s.is_zero()) continue;
            for (int j = 0; j < b.cols_; ++j) {
                const Scalar& t = b.at(k, j);
                if (!t.is_zero()) r.at(i, j) += s * t;
            }
        }
    return r;
}

Mat Mat::scaled(const Scalar& s) const {
    Mat r(rows_, cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] * s;
    return r;
}

Mat Mat::transposed() const {
    Mat r(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    return r;
}

bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
}

Vec Mat::apply(const Vec& v) const {
    Vec r;
    for (const auto& [j, s] : v.entries()) {
        if (j < 0 || j >= cols_) throw CalcError("vector index out of range in matrix apply");
        for (int i = 0; i < rows_; ++i) {
            const Scalar& m = at(i, j);
            if (m.is_zero()) continue;
            Scalar cur = r.at(i) + m * s;
            r.set(i, cur);
        }
    }
    return r;
}

namespace {

// Row echelon over exact scalars; pivots must be invertible constants.
int echelon(std::vector<std::vector<Scalar>>& rows, int cols) {
    int rank = 0;
    for (int c = 0; c < cols && rank < static_cast<int>(rows.size()); ++c) {
        int piv = -1;
        for (int r = rank; r < static_cast<int>(rows.size()); ++r) {
            if (!rows[r][c].is_zero()) { piv = r; break; }
        }
        if (piv < 0) continue;
        std::swap(rows[rank], rows[piv]);
        Scalar inv = Scalar(Rational(1)) / rows[rank][c];
        for (int j = c; j < cols; ++j) rows[rank][j] *= inv;
        for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
            if (r == rank || rows[r][c].is_zero()) continue;
            Scalar f = rows[r][c];
            for (int j = c; j < cols; ++j) rows[r][j] -= f * rows[rank][j];
        }
        ++rank;
    }
    return rank;
}

} // namespace

int Mat::rank() const {
    std::vector<std::vector<Scalar>> rows(rows_);
    for (int i = 0; i < rows_; ++i) {
        rows[i].resize(cols_);
        for (int j = 0; j < cols_; ++j) rows[i][j] = at(i, j);
    }
    return echelon(rows, cols_);
}

std::vector<std::vector<Scalar>> Mat::kernel() const {
    std::vector<std::vector<Scalar>> rows(rows_);
    for (int i = 0; i < rows_; ++i) {
        rows[i].resize(cols_);
        for (int j = 0; j < cols_; ++j) rows[i][j] = at(i, j);
    }
    int rank = echelon(rows, cols_);
    // Locate pivot columns of the reduced form.
    std::vector<int> pivot_col(rank, -1);
    std::vector<bool> is_pivot(cols_, false);
    for (int r = 0; r < rank; ++r) {
        for (int c = 0; c < cols_; ++c) {
            if (!rows[r][c].is_zero()) {
                pivot_col[r] = c;
                is_pivot[c] = true;
                break;
            }
        }
    }
    std::vector<std::vector<Scalar>> basis;
    for (int c = 0; c < cols_; ++c) {
        if (is_pivot[c]) continue;
        std::vector<Scalar> v(cols_);
        v[c] = Scalar(Rational(1));
        for (int r = 0; r < rank; ++r) v[pivot_col[r]] = -rows[r][c];
        basis.push_back(std::move(v));
    }
    return basis;
}

void RowSpan::reduce(std::vector<Scalar>& v) const {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const Scalar& f = v[pivots_[r]];
        if (f.is_zero()) continue;
        Scalar fac = f;  // rows are pivot-normalized
        for (int j = 0; j < dim_; ++j) v[j] -= fac * rows_[r][j];
    }
}

bool RowSpan::add(std::vector<Scalar> v) {
    if (static_cast<int>(v.size()) != dim_) throw CalcError("row dimension mismatch");
    reduce(v);
    int piv = -1;
    for (int j = 0; j < dim_; ++j) {
        if (!v[j].is_zero()) { piv = j; break; }
    }
    if (piv < 0) return false;
    Scalar inv = Scalar(Rational(1)) / v[piv];
    for (int j = 0; j < dim_; ++j) v[j] *= inv;
    // Back-substitute into existing rows to keep full reduction.
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        Scalar f = rows_[r][piv];
        if (f.is_zero()) continue;
        for (int j = 0; j < dim_; ++j) rows_[r][j] -= f * v[j];
    }
    rows_.push_back(std::move(v));
    pivots_.push_back(piv);
    return true;
}

bool RowSpan::contains(std::vector<Scalar> v) const {
    reduce(v);
    return std::all_of(v.begin(), v.end(), [](const Scalar& s) { return s.is_zero(); });
}

} // namespace logtensor
