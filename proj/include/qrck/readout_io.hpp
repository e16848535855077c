#pragma once

// Versioned text container for trained readouts. Layout (whitespace
// separated tokens, numbers in shortest round-trip form):
//
//   QRCK1
//   reservoir <n_input> <n_ancilla> <encoding> <input_dim> <h> <J> <t> <variant> <washout>
//   ridge <lambda>
//   alpha <P> <C>            followed by P*C values, row-major
//   observables <C> <D>      followed by C blocks of D*D (re, im) pairs, row-major
//   primal <0|1>
//     set <n_qubits> <scale> <groups>
//       group <pauli|zstring|projector> <n_codes> <rotation 0|1> <codes...> [D*D (re, im) pairs]
//     monomial_order <p_max>
//     channels <C>
//       channel <n_features> <indices...> <n_weights> <weights...>
//   end

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "qrck/quantum.hpp"
#include "qrck/training.hpp"

namespace qrck {

inline constexpr const char* kReadoutMagic = "QRCK1";

struct TrainedReadout {
  ReservoirSpec reservoir;
  double ridge = 0.0;
  RealMatrix alpha;                  // may be empty
  OptimalObservableSet observables;  // may be empty
  std::optional<PrimalSolution> primal;
};

void write_readout(std::ostream& os, const TrainedReadout& r);
TrainedReadout read_readout(std::istream& is);

void save_readout(const std::filesystem::path& path, const TrainedReadout& r);
TrainedReadout load_readout(const std::filesystem::path& path);

}  // namespace qrck
