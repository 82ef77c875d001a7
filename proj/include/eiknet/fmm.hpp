#pragma once

#include <cstdint>
#include <vector>

#include "eiknet/environment.hpp"
#include "eiknet/grid.hpp"
#include "eiknet/path.hpp"

namespace eiknet {

enum class FmmState : std::uint8_t { Far, Considered, Accepted };

struct FmmSolution {
  Config source;
  std::size_t source_index = 0;
  /// Travel time from the source; +inf on occupied and unreachable nodes.
  GridField travel_time;
  std::vector<FmmState> state;
  /// Node indices in the order they were accepted.
  std::vector<std::size_t> accept_order;
};

/// First-order upwind Fast Marching solve of |grad T| = 1 / S* on the
/// environment's lattice, seeded at the node nearest to `source`. Occupied
/// nodes are never entered. Heap ties break on node index.
/// Throws "source in obstacle" when that node is occupied.
FmmSolution fmm_solve(const Environment& env, const Config& source);

/// Same solve with an explicit per-node speed lattice (occupied nodes are
/// the ones flagged in `blocked`).
FmmSolution fmm_solve(const GridField& speed, const std::vector<std::uint8_t>& blocked,
                      const Config& source);

/// Normalized gradient descent on the multilinear interpolant of T, from
/// `goal` back to the source. Waypoints run goal -> source.
/// Throws "unreachable" when T(goal) is not finite and "backtrack stalled"
/// when the iteration budget (4 T(goal) / step + 10) runs out.
PlanResult fmm_backtrack(const FmmSolution& sol, const Environment& env, const Config& goal,
                         double step);

/// Mask of unoccupied lattice nodes.
std::vector<std::uint8_t> free_mask(const OccupancyGrid& grid);

/// Mean |model - oracle| over masked nodes where the oracle is finite.
/// Throws when no node qualifies.
double mae_vs_oracle(const GridField& model, const FmmSolution& oracle,
                     const std::vector<std::uint8_t>& mask);

/// Residual of the discrete upwind update at an accepted node, in grid units
/// (h^2 scaled): sum_k max(T - a_k, 0)^2 - (h / S)^2.
double upwind_residual(const FmmSolution& sol, const GridField& speed, std::size_t idx);

/// Per-node S* of a grid environment.
GridField speed_lattice(const Environment& env);

}  // namespace eiknet
