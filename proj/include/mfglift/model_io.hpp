#pragma once

#include <string>

#include "mfglift/coefficients.hpp"

namespace mfglift {

/// A parsed model file: the model plus file-level flags that do not live
/// on MFGModel itself.
struct ModelFile {
    MFGModel model;
    /// Waives the aggregate-coefficient Lipschitz gate when lifting.
    bool lipschitz_waiver = false;
};

/// Parse the sectioned key-value model format from text. `name` labels
/// error messages (usually the file path). Coefficients are built from
/// the additive term grammar
///   number | control | control(k) | control2(k) | state(k)
///   | conv(kernel, G) | density(G) | mean(G)
/// with kernel ::= identity | gaussian(w) | indicator(r) and
/// G ::= identity | tanh | scale(c) | quad(c), joined by +/-.
/// After construction, b, sigma, f, g are run through the randomized
/// translation-invariance checker and their certificates recorded; a file
/// that declares aggregate ([common_noise]) terms while any certificate
/// fails is refused with the checker's witness.
/// Throws ParseError (with line and column) on malformed input,
/// CertificationError as above, InvalidArgumentError on violated model
/// invariants.
ModelFile read_model_text(const std::string& text,
                          const std::string& name = "<string>");

/// read_model_text over the contents of `path`.
ModelFile read_model_file(const std::string& path);

/// Convenience: the parsed model only.
MFGModel parse_model(const std::string& path);

/// Serialize a model (plus the waiver flag) in the same format, with
/// 17-significant-digit numbers so coefficient parameters survive a
/// round trip exactly. The grid is written by exact anchors (x_min, dx,
/// n); the initial law is written as normal(mean, variance) with the
/// grid moments, so a regenerated initial law agrees with the original
/// in moments but not bitwise — archives that must preserve the law
/// exactly store it separately as CSV.
std::string write_model_text(const MFGModel& model,
                             bool lipschitz_waiver = false);
void write_model(const MFGModel& model, const std::string& path,
                 bool lipschitz_waiver = false);

} // namespace mfglift
