#pragma once

#include "config.h"

#include "cinetransfer/body.h"
#include "cinetransfer/raster.h"
#include "cinetransfer/refine.h"

#include <span>
#include <string>
#include <vector>

namespace cinetransfer::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitStage = 3,
};

int cmd_synth(const PipelineConfig& cfg);
int cmd_retarget(const PipelineConfig& cfg);
int cmd_reshoot(const PipelineConfig& cfg);
int cmd_compose_refine(const PipelineConfig& cfg);
int cmd_eval(const PipelineConfig& cfg);

/// Dispatches a command name; unknown names are validation errors.
int run_command(const std::string& name, const PipelineConfig& cfg);

/// Parses the command line and runs one command.
int cli_main(int argc, char** argv);

/// Two-sided Lambert shading of the visible surface, lit from the camera's
/// upper left, over a black background.
Frame shade_character(const Fragments& fragments, const Vertices& vertices, const Faces& faces, const PinholeCamera& cam);

} // namespace cinetransfer::cli
