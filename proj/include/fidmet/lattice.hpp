#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace fidmet {

/// Thrown when an exact enumeration would exceed its configured size budget.
class BudgetExceeded : public std::runtime_error {
   public:
    explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Incidence { star, plaquette };

/// L x L square lattice on the genus-one torus.
///
/// Sites are indexed row-major, s = y * L + x. Bond s (0 <= s < L^2) is the
/// horizontal bond from site s to its right neighbour; bond L^2 + s is the
/// vertical bond from site s to the site above it. Plaquette p has site p as
/// its lower-left corner.
class TorusLattice {
   public:
    explicit TorusLattice(std::size_t L) : L_(L) {
        if (L < 2) {
            throw std::invalid_argument("TorusLattice: L must be >= 2, got " + std::to_string(L));
        }
    }

    std::size_t size() const { return L_; }
    std::size_t num_sites() const { return L_ * L_; }
    std::size_t num_plaquettes() const { return L_ * L_; }
    std::size_t num_bonds() const { return 2 * L_ * L_; }

    std::size_t site(std::size_t x, std::size_t y) const { return (y % L_) * L_ + (x % L_); }
    std::size_t x_of(std::size_t s) const { return s % L_; }
    std::size_t y_of(std::size_t s) const { return s / L_; }

    std::size_t right(std::size_t s) const { return site(x_of(s) + 1, y_of(s)); }
    std::size_t left(std::size_t s) const { return site(x_of(s) + L_ - 1, y_of(s)); }
    std::size_t up(std::size_t s) const { return site(x_of(s), y_of(s) + 1); }
    std::size_t down(std::size_t s) const { return site(x_of(s), y_of(s) + L_ - 1); }

    std::size_t horizontal_bond(std::size_t s) const { return s; }
    std::size_t vertical_bond(std::size_t s) const { return num_sites() + s; }
    bool is_horizontal(std::size_t b) const { return b < num_sites(); }

    /// Bonds around site s, ordered {right, up, left, down}.
    std::array<std::size_t, 4> star(std::size_t s) const {
        check_site(s);
        return {horizontal_bond(s), vertical_bond(s), horizontal_bond(left(s)),
                vertical_bond(down(s))};
    }

    /// Bonds around plaquette p, ordered {bottom, right, top, left}.
    std::array<std::size_t, 4> plaquette(std::size_t p) const {
        check_site(p);
        return {horizontal_bond(p), vertical_bond(right(p)), horizontal_bond(up(p)),
                vertical_bond(p)};
    }

    std::array<std::size_t, 4> incident_bonds(Incidence kind, std::size_t index) const {
        return kind == Incidence::star ? star(index) : plaquette(index);
    }

    /// {tail, head} of bond b in its reference (right / up) orientation.
    std::pair<std::size_t, std::size_t> endpoints(std::size_t b) const {
        if (b >= num_bonds()) {
            throw std::out_of_range("TorusLattice: bond index " + std::to_string(b) +
                                    " out of range");
        }
        if (is_horizontal(b)) return {b, right(b)};
        const std::size_t s = b - num_sites();
        return {s, up(s)};
    }

   private:
    void check_site(std::size_t s) const {
        if (s >= num_sites()) {
            throw std::out_of_range("TorusLattice: index " + std::to_string(s) + " out of range");
        }
    }

    std::size_t L_;
};

inline TorusLattice build_torus(std::size_t L) { return TorusLattice(L); }

}  // namespace fidmet
