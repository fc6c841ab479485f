#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "corrlink/field.hpp"

namespace corrlink {

struct EquationTerm {
    uint32_t col = 0;
    uint64_t coef = 0;
};

/* One received (or synthesized) linear observation over the packet symbols.
 * Terms are kept sorted by column with nonzero coefficients. */
struct Equation {
    std::vector<EquationTerm> terms;
    int32_t slot = -1;  // channel use it was heard in, -1 if synthetic
    int32_t phase = 0;  // protocol phase that produced it, 0 if synthetic
};

class EquationStore {
public:
    EquationStore(PrimeField field, uint32_t num_cols, int receiver_id = 0)
        : field_(field), cols_(num_cols), receiver_id_(receiver_id) {}

    const PrimeField& field() const { return field_; }
    uint32_t cols() const { return cols_; }
    int receiver_id() const { return receiver_id_; }

    /* Normalizes the row (sort, merge duplicate columns, drop zeros) and
     * keeps it even if it reduces to nothing, so slot accounting stays
     * faithful to what was heard. */
    void add(Equation eq);

    size_t size() const { return rows_.size(); }
    const std::vector<Equation>& rows() const { return rows_; }

private:
    PrimeField field_;
    uint32_t cols_;
    int receiver_id_;
    std::vector<Equation> rows_;
};

/* Exact rank over the store's field. Rows with at most two nonzero terms go
 * through a union-find of column relations; wider rows are eliminated in the
 * quotient space, so sparse-dominated systems stay near linear time. */
uint32_t rank(const EquationStore& store);

/* Substitutes known packet values: terms on known columns are dropped (the
 * right-hand sides are not tracked, only solvability). Row count preserved. */
EquationStore project_out_known(const EquationStore& store,
                                const std::map<uint32_t, uint64_t>& known);

/* Columns are ordered user-1 packets then user-2 packets; the store's
 * receiver_id picks which block is "own" (receiver 1 owns the first
 * own_count columns, receiver 2 the last own_count). Decodable iff
 *   rank(all rows) - rank(rows restricted to interferer columns) == own_count,
 * i.e. the row span pins the whole own block once interference is projected
 * away. Monotone: adding rows never flips true to false. */
bool decodable(const EquationStore& store, uint32_t own_count, uint32_t interferer_count);

/* Incremental Gaussian elimination over a dense coordinate space. GF(2)
 * rows are bit-packed so elimination is word-parallel XOR. */
class IncrementalRank {
public:
    IncrementalRank(PrimeField field, uint32_t dim);

    /* Reduces the row against the basis; returns true (and absorbs it) when
     * it is independent of everything added before. */
    bool add_row(const std::vector<uint64_t>& dense_row);

    uint32_t rank() const { return rank_; }
    uint32_t dim() const { return dim_; }

private:
    PrimeField field_;
    uint32_t dim_;
    uint32_t rank_ = 0;
    bool bitpacked_;
    std::vector<std::vector<uint64_t>> basis_;   // generic rows, pivot-normalized
    std::vector<uint32_t> pivot_;
    std::vector<std::vector<uint64_t>> bit_basis_; // GF(2) rows, packed 64/word
    std::vector<uint32_t> bit_pivot_;
};

} // namespace corrlink
