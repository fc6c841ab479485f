#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "corrlink/linalg.hpp"
#include "corrlink/rng.hpp"

using namespace corrlink;

namespace {

/* Textbook dense elimination, written independently of the production rank
 * path (no union-find, no incremental basis); the reference for everything. */
uint32_t naive_rank(const PrimeField& f, std::vector<std::vector<uint64_t>> m) {
    if (m.empty()) return 0;
    uint32_t rows = static_cast<uint32_t>(m.size());
    uint32_t cols = static_cast<uint32_t>(m[0].size());
    uint32_t rnk = 0;
    for (uint32_t c = 0; c < cols && rnk < rows; ++c) {
        uint32_t piv = rnk;
        while (piv < rows && m[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[rnk], m[piv]);
        uint64_t inv = f.inv(m[rnk][c]);
        for (uint32_t j = c; j < cols; ++j) m[rnk][j] = f.mul(m[rnk][j], inv);
        for (uint32_t r = 0; r < rows; ++r) {
            if (r == rnk || m[r][c] == 0) continue;
            uint64_t v = m[r][c];
            for (uint32_t j = c; j < cols; ++j)
                m[r][j] = f.sub(m[r][j], f.mul(v, m[rnk][j]));
        }
        ++rnk;
    }
    return rnk;
}

std::vector<std::vector<uint64_t>> to_dense(const EquationStore& st) {
    std::vector<std::vector<uint64_t>> m;
    for (const auto& row : st.rows()) {
        std::vector<uint64_t> dense(st.cols(), 0);
        for (const auto& t : row.terms)
            dense[t.col] = st.field().add(dense[t.col], t.coef);
        m.push_back(std::move(dense));
    }
    return m;
}

/* Exhaustive null-space scan: the own block is pinned by the observations iff
 * every solution of A z = 0 vanishes on it. */
bool oracle_decodable(const EquationStore& st, uint32_t own, uint32_t inter) {
    const uint64_t q = st.field().modulus();
    const uint32_t n = st.cols();
    REQUIRE(own + inter == n);
    uint32_t own_begin = st.receiver_id() == 2 ? inter : 0;
    std::vector<uint64_t> z(n, 0);
    for (;;) {
        bool in_null = true;
        for (const auto& row : st.rows()) {
            uint64_t acc = 0;
            for (const auto& t : row.terms)
                acc = st.field().add(acc, st.field().mul(t.coef, z[t.col]));
            if (acc != 0) { in_null = false; break; }
        }
        if (in_null)
            for (uint32_t c = own_begin; c < own_begin + own; ++c)
                if (z[c]) return false;
        uint32_t k = 0;
        while (k < n) {
            if (++z[k] == q) { z[k] = 0; ++k; } else break;
        }
        if (k == n) break;
    }
    return true;
}

EquationStore random_store(Rng& rng, const PrimeField& f, uint32_t cols, uint32_t nrows,
                           uint32_t max_terms, int receiver_id = 1) {
    EquationStore st(f, cols, receiver_id);
    for (uint32_t r = 0; r < nrows; ++r) {
        Equation eq;
        uint32_t nt = 1 + static_cast<uint32_t>(rng.next_below(max_terms));
        for (uint32_t t = 0; t < nt; ++t)
            eq.terms.push_back({static_cast<uint32_t>(rng.next_below(cols)),
                                rng.next_below(f.modulus())});
        st.add(std::move(eq));
    }
    return st;
}

} // namespace

TEST_CASE("equation store normalizes rows on insert") {
    PrimeField f(7);
    EquationStore st(f, 5);
    st.add({{{3, 2}, {1, 4}, {3, 9}}, 12, 1}); // 9 = 2 mod 7, col 3 merges to 4
    REQUIRE(st.size() == 1);
    const auto& terms = st.rows()[0].terms;
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].col == 1);
    CHECK(terms[0].coef == 4);
    CHECK(terms[1].col == 3);
    CHECK(terms[1].coef == 4);
    CHECK(st.rows()[0].slot == 12);
    CHECK(st.rows()[0].phase == 1);

    st.add({{{2, 3}, {2, 4}}, -1, 0}); // cancels to nothing but the row stays
    REQUIRE(st.size() == 2);
    CHECK(st.rows()[1].terms.empty());
    CHECK(rank(st) == 2 - 1);

    CHECK_THROWS_AS(st.add({{{5, 1}}, -1, 0}), std::out_of_range);
}

TEST_CASE("rank on hand-built systems") {
    PrimeField f;
    EquationStore id3(f, 3);
    id3.add({{{0, 1}}, -1, 0});
    id3.add({{{1, 5}}, -1, 0});
    id3.add({{{2, 9}}, -1, 0});
    CHECK(rank(id3) == 3);

    PrimeField f2(2);
    EquationStore rep(f2, 4);
    rep.add({{{0, 1}, {2, 1}}, -1, 0});
    rep.add({{{0, 1}, {2, 1}}, -1, 0});
    rep.add({{{0, 1}, {2, 1}}, -1, 0});
    CHECK(rank(rep) == 1);

    EquationStore empty(f, 8);
    CHECK(rank(empty) == 0);
}

TEST_CASE("rank agrees with dense elimination on random systems") {
    Rng rng(2024);
    PrimeField big; // 2^31 - 1
    PrimeField small(7);
    for (int it = 0; it < 60; ++it) {
        const PrimeField& f = (it % 2) ? big : small;
        uint32_t cols = 2 + static_cast<uint32_t>(rng.next_below(29));
        uint32_t rows = 1 + static_cast<uint32_t>(rng.next_below(50));
        // mixture of sparse and wide rows exercises both engine paths
        uint32_t max_terms = 1 + static_cast<uint32_t>(rng.next_below(std::min(cols, 8u)));
        EquationStore st = random_store(rng, f, cols, rows, max_terms);
        CHECK(rank(st) == naive_rank(f, to_dense(st)));
    }
}

TEST_CASE("rank is invariant under row scaling and permutation") {
    Rng rng(77);
    PrimeField f(101);
    EquationStore a = random_store(rng, f, 20, 30, 6);
    std::vector<Equation> rows(a.rows().begin(), a.rows().end());
    // Fisher-Yates with the test rng
    for (size_t k = rows.size(); k > 1; --k)
        std::swap(rows[k - 1], rows[rng.next_below(k)]);
    EquationStore b(f, 20);
    for (auto& row : rows) {
        uint64_t s = 1 + rng.next_below(f.modulus() - 1);
        Equation eq = row;
        for (auto& t : eq.terms) t.coef = f.mul(t.coef, s);
        b.add(std::move(eq));
    }
    CHECK(rank(a) == rank(b));
}

TEST_CASE("rank of a concatenation is bounded by the parts") {
    Rng rng(5150);
    PrimeField f(13);
    for (int it = 0; it < 20; ++it) {
        EquationStore a = random_store(rng, f, 12, 8, 4);
        EquationStore b = random_store(rng, f, 12, 8, 4);
        EquationStore both(f, 12);
        for (const auto& r : a.rows()) both.add(r);
        for (const auto& r : b.rows()) both.add(r);
        uint32_t ra = rank(a), rb = rank(b), rc = rank(both);
        CHECK(rc >= std::max(ra, rb));
        CHECK(rc <= ra + rb);
    }
}

TEST_CASE("bit-packed GF(2) path agrees with word-level elimination") {
    Rng rng(31337);
    PrimeField f2(2);
    for (int it = 0; it < 200; ++it) {
        uint32_t dim = 65 + static_cast<uint32_t>(rng.next_below(30)); // force 2 words
        uint32_t nrows = 10 + static_cast<uint32_t>(rng.next_below(70));
        std::vector<std::vector<uint64_t>> dense;
        IncrementalRank inc(f2, dim);
        uint32_t inc_rank = 0;
        for (uint32_t r = 0; r < nrows; ++r) {
            std::vector<uint64_t> row(dim);
            for (auto& v : row) v = rng.next() & 1;
            dense.push_back(row);
            if (inc.add_row(row)) ++inc_rank;
        }
        CHECK(inc.rank() == inc_rank);
        CHECK(inc.rank() == naive_rank(f2, dense));
    }
}

TEST_CASE("incremental rank rejects dependent rows") {
    PrimeField f(11);
    IncrementalRank inc(f, 4);
    CHECK(inc.dim() == 4);
    CHECK(inc.add_row({1, 2, 3, 4}));
    CHECK_FALSE(inc.add_row({2, 4, 6, 8}));
    CHECK(inc.add_row({0, 1, 0, 0}));
    CHECK_FALSE(inc.add_row({1, 3, 3, 4})); // sum of the first two
    CHECK(inc.rank() == 2);
    CHECK_THROWS_AS(inc.add_row({1, 2, 3}), std::invalid_argument);
    CHECK_FALSE(inc.add_row({0, 0, 0, 0}));
}

TEST_CASE("decodable on hand-built micro systems") {
    PrimeField f;
    // receiver 1, one own packet x0, one interfering x1
    EquationStore direct(f, 2, 1);
    direct.add({{{0, 3}}, -1, 0});
    CHECK(decodable(direct, 1, 1));

    EquationStore mixed_only(f, 2, 1);
    mixed_only.add({{{0, 1}, {1, 1}}, -1, 0});
    mixed_only.add({{{0, 2}, {1, 2}}, -1, 0});
    CHECK_FALSE(decodable(mixed_only, 1, 1));

    EquationStore resolved(f, 2, 1);
    resolved.add({{{0, 1}, {1, 1}}, -1, 0});
    resolved.add({{{1, 4}}, -1, 0});
    CHECK(decodable(resolved, 1, 1));

    // receiver 2 owns the trailing block
    EquationStore rx2(f, 2, 2);
    rx2.add({{{0, 5}}, -1, 0});
    CHECK_FALSE(decodable(rx2, 1, 1));
    rx2.add({{{0, 1}, {1, 7}}, -1, 0});
    CHECK(decodable(rx2, 1, 1));

    CHECK_THROWS_AS(decodable(direct, 1, 2), std::invalid_argument);
}

TEST_CASE("decodable agrees with exhaustive null-space enumeration") {
    Rng rng(909090);
    struct Setup { uint64_t q; uint32_t max_m; int iters; };
    const Setup setups[] = {{2, 6, 150}, {3, 4, 60}, {5, 3, 30}};
    for (const auto& su : setups) {
        PrimeField f(su.q);
        for (int it = 0; it < su.iters; ++it) {
            uint32_t m = 1 + static_cast<uint32_t>(rng.next_below(su.max_m));
            int rid = 1 + static_cast<int>(rng.next_below(2));
            uint32_t nrows = 1 + static_cast<uint32_t>(rng.next_below(3 * m));
            EquationStore st = random_store(rng, f, 2 * m, nrows, 4, rid);
            INFO("q = " << su.q << " m = " << m << " receiver " << rid << " iter " << it);
            CHECK(decodable(st, m, m) == oracle_decodable(st, m, m));
        }
    }
}

TEST_CASE("decodable is monotone under added observations") {
    Rng rng(11111);
    PrimeField f(5);
    for (int it = 0; it < 40; ++it) {
        uint32_t m = 2 + static_cast<uint32_t>(rng.next_below(2));
        uint32_t nrows = 1 + static_cast<uint32_t>(rng.next_below(2 * m));
        EquationStore st = random_store(rng, f, 2 * m, nrows, 4);
        bool was = decodable(st, m, m);
        uint32_t prev_rank = rank(st);
        for (int extra = 0; extra < 8; ++extra) {
            Equation eq;
            uint32_t nt = 1 + static_cast<uint32_t>(rng.next_below(4));
            for (uint32_t t = 0; t < nt; ++t)
                eq.terms.push_back({static_cast<uint32_t>(rng.next_below(2 * m)),
                                    rng.next_below(5)});
            st.add(std::move(eq));
            uint32_t cur_rank = rank(st);
            CHECK(cur_rank >= prev_rank);
            prev_rank = cur_rank;
            bool now = decodable(st, m, m);
            if (was) CHECK(now);
            was = now;
        }
    }
}

TEST_CASE("projecting out known packets") {
    PrimeField f;
    EquationStore st(f, 4, 1);
    st.add({{{0, 2}, {2, 5}}, 3, 1});
    st.add({{{1, 1}, {3, 1}}, 4, 1});

    EquationStore same = project_out_known(st, {});
    CHECK(same.size() == st.size());
    CHECK(rank(same) == rank(st));

    EquationStore dropped = project_out_known(st, {{2, 17}, {3, 1}});
    REQUIRE(dropped.size() == 2);
    CHECK(dropped.rows()[0].terms.size() == 1);
    CHECK(dropped.rows()[0].terms[0].col == 0);
    CHECK(dropped.rows()[0].slot == 3);

    // side information flips a transcript from stuck to decodable: both own
    // packets only ever arrived mixed with one shared interferer
    EquationStore tr(f, 4, 1);
    tr.add({{{0, 1}, {2, 1}}, 1, 1});
    tr.add({{{1, 1}, {2, 1}}, 2, 1});
    tr.add({{{2, 1}, {3, 1}}, 3, 1});
    CHECK_FALSE(decodable(tr, 2, 2));
    EquationStore with_side = project_out_known(tr, {{2, 0}});
    CHECK(decodable(with_side, 2, 2));
}
