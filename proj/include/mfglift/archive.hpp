#pragma once

#include <string>

#include "mfglift/lift.hpp"
#include "mfglift/ncn_solver.hpp"

namespace mfglift {

/// On-disk equilibrium archives. An archive is a directory of plain-text
/// files so results can be inspected, diffed, and piped between the
/// command-line stages:
///
///   base equilibrium (no aggregate noise)
///     model.cfg      the model in config syntax
///     flow.csv       t,x,density   (the marginal flow, 17-digit floats)
///     feedback.csv   t,x,alpha     (the equilibrium feedback field)
///     value.csv      t,x,value     (the dynamic-programming value field)
///     meta.csv       key,value     (converged flag, residual history)
///
///   aggregate-noise equilibrium
///     model.cfg, flow.csv, meta.csv as above (meta records the noise seed)
///     noise.csv      t,noise,shift (driving path and translation path)
///     base/          the nested base-equilibrium archive
///
/// Densities, fields, and paths round trip bitwise through the 17-digit
/// format. The config file stores the initial law by its moments only, so
/// readers restore model.lambda verbatim from the first flow block instead.
/// Readers re-run the invariance certification that parsing performs, so a
/// read archive is immediately usable by the lift.

void write_ncn_archive(const NCNSolution& solution, const std::string& dir);
NCNSolution read_ncn_archive(const std::string& dir);

void write_cn_archive(const CNSolution& solution, const std::string& dir);
CNSolution read_cn_archive(const std::string& dir);

/// Whether the directory holds an aggregate-noise archive (it has a
/// noise.csv) as opposed to a base archive.
bool is_cn_archive(const std::string& dir);

} // namespace mfglift
