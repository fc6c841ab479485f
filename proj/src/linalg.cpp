#include "corrlink/linalg.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace corrlink {

void EquationStore::add(Equation eq) {
    for (auto& t : eq.terms) {
        if (t.col >= cols_) throw std::out_of_range("equation column out of range");
        t.coef = field_.reduce(t.coef);
    }
    std::sort(eq.terms.begin(), eq.terms.end(),
              [](const EquationTerm& a, const EquationTerm& b) { return a.col < b.col; });
    std::vector<EquationTerm> merged;
    for (const auto& t : eq.terms) {
        if (!merged.empty() && merged.back().col == t.col)
            merged.back().coef = field_.add(merged.back().coef, t.coef);
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const EquationTerm& t) { return t.coef == 0; }),
                 merged.end());
    eq.terms = std::move(merged);
    rows_.push_back(std::move(eq));
}

namespace {

/* Union-find over columns tracking, per unpinned component, the one functional
 * that annihilates the span of its weight-<=2 rows: w_col = mu_col * w_root.
 * A "pinned" component is one whose coordinates are individually spanned, so
 * the functional is gone and any row supported inside it is dependent. */
class SparseRankEngine {
public:
    SparseRankEngine(const PrimeField& f, uint32_t n)
        : f_(f), parent_(n), ratio_(n, 1), pinned_(n, false) {
        for (uint32_t i = 0; i < n; ++i) parent_[i] = i;
    }

    std::pair<uint32_t, uint64_t> find(uint32_t x) {
        path_.clear();
        uint32_t r = x;
        while (parent_[r] != r) { path_.push_back(r); r = parent_[r]; }
        uint64_t acc = 1;
        for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
            acc = f_.mul(ratio_[*it], acc);
            parent_[*it] = r;
            ratio_[*it] = acc;
        }
        return {r, x == r ? 1 : ratio_[x]};
    }

    bool pinned_root(uint32_t root) const { return pinned_[root]; }

    void add_singleton(uint32_t i) {
        auto [r, mu] = find(i);
        (void)mu;
        if (!pinned_[r]) { pinned_[r] = true; ++rank_; }
    }

    void add_edge(uint32_t i, uint32_t j, uint64_t a, uint64_t b) {
        auto [ri, mi] = find(i);
        auto [rj, mj] = find(j);
        if (ri == rj) {
            if (pinned_[ri]) return;
            uint64_t t = f_.add(f_.mul(a, mi), f_.mul(b, mj));
            if (t != 0) { pinned_[ri] = true; ++rank_; }
            return;
        }
        if (pinned_[ri] && pinned_[rj]) {
            parent_[rj] = ri; // dependent row, union is bookkeeping only
            ratio_[rj] = 1;
            return;
        }
        if (pinned_[ri] || pinned_[rj]) {
            parent_[rj] = ri;
            ratio_[rj] = 1;
            pinned_[ri] = true;
        } else {
            // a*mi*w_ri + b*mj*w_rj = 0 fixes the merged functional
            parent_[rj] = ri;
            ratio_[rj] = f_.neg(f_.mul(f_.mul(a, mi), f_.inv(f_.mul(b, mj))));
        }
        ++rank_;
    }

    uint32_t rank() const { return rank_; }

private:
    PrimeField f_;
    std::vector<uint32_t> parent_;
    std::vector<uint64_t> ratio_;
    std::vector<bool> pinned_;
    std::vector<uint32_t> path_;
    uint32_t rank_ = 0;
};

/* keep == nullptr keeps every column; otherwise only columns with keep[col]. */
uint32_t rank_of_rows(const PrimeField& f, uint32_t ncols,
                      const std::vector<Equation>& rows,
                      const std::vector<char>* keep) {
    SparseRankEngine uf(f, ncols);
    std::vector<const Equation*> wide;
    std::vector<EquationTerm> buf;
    for (const auto& row : rows) {
        buf.clear();
        for (const auto& t : row.terms)
            if (!keep || (*keep)[t.col]) buf.push_back(t);
        if (buf.empty()) continue;
        if (buf.size() == 1) {
            uf.add_singleton(buf[0].col);
        } else if (buf.size() == 2) {
            uf.add_edge(buf[0].col, buf[1].col, buf[0].coef, buf[1].coef);
        } else {
            wide.push_back(&row);
        }
    }
    if (wide.empty()) return uf.rank();

    // Quotient pass: image of e_col is mu_col on its component's coordinate,
    // zero when the component is pinned. Dense elimination in that space.
    std::unordered_map<uint32_t, uint32_t> comp_index;
    for (const Equation* row : wide)
        for (const auto& t : row->terms) {
            if (keep && !(*keep)[t.col]) continue;
            auto [root, mu] = uf.find(t.col);
            (void)mu;
            if (!uf.pinned_root(root)) comp_index.emplace(root, 0);
        }
    uint32_t dim = 0;
    for (auto& kv : comp_index) kv.second = dim++;
    if (dim == 0) return uf.rank();

    IncrementalRank elim(f, dim);
    std::vector<uint64_t> dense(dim);
    uint32_t quot_rank = 0;
    for (const Equation* row : wide) {
        std::fill(dense.begin(), dense.end(), 0);
        for (const auto& t : row->terms) {
            if (keep && !(*keep)[t.col]) continue;
            auto [root, mu] = uf.find(t.col);
            if (uf.pinned_root(root)) continue;
            uint32_t idx = comp_index[root];
            dense[idx] = f.add(dense[idx], f.mul(t.coef, mu));
        }
        if (elim.add_row(dense)) ++quot_rank;
        if (quot_rank == dim) break;
    }
    return uf.rank() + quot_rank;
}

} // namespace

uint32_t rank(const EquationStore& store) {
    return rank_of_rows(store.field(), store.cols(), store.rows(), nullptr);
}

EquationStore project_out_known(const EquationStore& store,
                                const std::map<uint32_t, uint64_t>& known) {
    EquationStore out(store.field(), store.cols(), store.receiver_id());
    for (const auto& row : store.rows()) {
        Equation eq;
        eq.slot = row.slot;
        eq.phase = row.phase;
        for (const auto& t : row.terms)
            if (known.find(t.col) == known.end()) eq.terms.push_back(t);
        out.add(std::move(eq));
    }
    return out;
}

bool decodable(const EquationStore& store, uint32_t own_count, uint32_t interferer_count) {
    if (own_count + interferer_count != store.cols())
        throw std::invalid_argument("block sizes do not match store width");
    // Receiver 1 owns the leading block, receiver 2 the trailing one.
    uint32_t own_begin = store.receiver_id() == 2 ? interferer_count : 0;
    std::vector<char> interferer_only(store.cols(), 1);
    for (uint32_t c = own_begin; c < own_begin + own_count; ++c) interferer_only[c] = 0;
    uint32_t r_all = rank_of_rows(store.field(), store.cols(), store.rows(), nullptr);
    uint32_t r_int = rank_of_rows(store.field(), store.cols(), store.rows(), &interferer_only);
    return r_all - r_int == own_count;
}

IncrementalRank::IncrementalRank(PrimeField field, uint32_t dim)
    : field_(field), dim_(dim), bitpacked_(field.modulus() == 2) {}

bool IncrementalRank::add_row(const std::vector<uint64_t>& dense_row) {
    if (dense_row.size() != dim_) throw std::invalid_argument("row has wrong dimension");
    if (rank_ == dim_) return false;

    if (bitpacked_) {
        size_t words = (dim_ + 63) / 64;
        std::vector<uint64_t> row(words, 0);
        for (uint32_t c = 0; c < dim_; ++c)
            if (dense_row[c] & 1) row[c >> 6] ^= 1ull << (c & 63);
        // basis kept sorted by pivot; one forward pass reduces the candidate
        for (size_t k = 0; k < bit_basis_.size(); ++k) {
            uint32_t pv = bit_pivot_[k];
            if (row[pv >> 6] >> (pv & 63) & 1)
                for (size_t w = pv >> 6; w < words; ++w) row[w] ^= bit_basis_[k][w];
        }
        uint32_t pivot = dim_;
        for (size_t w = 0; w < words; ++w)
            if (row[w]) {
                pivot = static_cast<uint32_t>(w * 64 + __builtin_ctzll(row[w]));
                break;
            }
        if (pivot == dim_) return false;
        auto pos = std::lower_bound(bit_pivot_.begin(), bit_pivot_.end(), pivot);
        size_t at = static_cast<size_t>(pos - bit_pivot_.begin());
        bit_pivot_.insert(pos, pivot);
        bit_basis_.insert(bit_basis_.begin() + static_cast<long>(at), std::move(row));
        ++rank_;
        return true;
    }

    std::vector<uint64_t> row(dim_);
    for (uint32_t c = 0; c < dim_; ++c) row[c] = field_.reduce(dense_row[c]);
    for (size_t k = 0; k < basis_.size(); ++k) {
        uint64_t c = row[pivot_[k]];
        if (c == 0) continue;
        const auto& b = basis_[k];
        for (uint32_t j = pivot_[k]; j < dim_; ++j)
            if (b[j]) row[j] = field_.sub(row[j], field_.mul(c, b[j]));
    }
    uint32_t pivot = dim_;
    for (uint32_t c = 0; c < dim_; ++c)
        if (row[c]) { pivot = c; break; }
    if (pivot == dim_) return false;
    uint64_t inv = field_.inv(row[pivot]);
    for (uint32_t c = pivot; c < dim_; ++c)
        if (row[c]) row[c] = field_.mul(row[c], inv);
    auto pos = std::lower_bound(pivot_.begin(), pivot_.end(), pivot);
    size_t at = static_cast<size_t>(pos - pivot_.begin());
    pivot_.insert(pos, pivot);
    basis_.insert(basis_.begin() + static_cast<long>(at), std::move(row));
    ++rank_;
    return true;
}

} // namespace corrlink
