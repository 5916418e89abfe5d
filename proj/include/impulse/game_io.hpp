#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "impulse/game.hpp"

namespace impulse {

/// Malformed or invalid game-spec document. The message names the key or
/// index at fault.
class GameFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of basis functions, one row per state.
using BasisMatrix = std::vector<std::vector<double>>;

nlohmann::json game_to_json(const ImpulseGame& game);
/// Parses and validates; throws GameFileError.
ImpulseGame game_from_json(const nlohmann::json& doc);

ImpulseGame load_game(const std::filesystem::path& path);
void save_game(const ImpulseGame& game, const std::filesystem::path& path,
               const std::optional<BasisMatrix>& basis = std::nullopt);

/// The optional `basis` block of a game-spec file.
std::optional<BasisMatrix> load_basis(const std::filesystem::path& path);

/// Serialises with a trailing newline; output is byte-stable for equal input.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace impulse
