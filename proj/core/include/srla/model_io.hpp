#pragma once

#include <filesystem>
#include <string>

#include "srla/dataio.hpp"
#include "srla/hmm.hpp"
#include "srla/iohmm.hpp"
#include "srla/qlearn.hpp"

namespace srla {

/// Versioned self-describing JSON text, format_version 1. Doubles survive a
/// round trip exactly. Loading a file with any other version fails with an
/// unsupported-version error; truncated or malformed files fail without
/// producing a partial model.
void save_model(const HmmModel& model, const std::filesystem::path& file);
void save_model(const IohmmModel& model, const std::filesystem::path& file);
void save_model(const QFunction& model, const std::filesystem::path& file);
void save_model(const Normalizer& model, const std::filesystem::path& file);

HmmModel load_hmm(const std::filesystem::path& file);
IohmmModel load_iohmm(const std::filesystem::path& file);
QFunction load_qfunction(const std::filesystem::path& file);
Normalizer load_normalizer(const std::filesystem::path& file);

/// The "kind" tag stored in a model file, without loading the payload.
std::string peek_model_kind(const std::filesystem::path& file);

}  // namespace srla
