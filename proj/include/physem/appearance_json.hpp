#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "physem/registry.hpp"

namespace physem {

inline constexpr std::string_view kAppearanceFormat = "physem-appearance-list";

/// Canonical document: fixed key order, reals with four decimals, one region
/// per line. Identical lists always serialize to identical bytes.
std::string export_appearance_list(const AppearanceList& list);

/// Inverse of export_appearance_list. Throws InvalidInput on malformed documents.
AppearanceList import_appearance_list(std::string_view text);

void save_appearance_list(const std::filesystem::path& path, const AppearanceList& list);
AppearanceList load_appearance_list(const std::filesystem::path& path);

/// "%.4f" formatting shared by all canonical documents.
std::string format_real(double value);

}  // namespace physem
