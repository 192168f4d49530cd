// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/synthcam.hpp>
#include <ccmeta/tasks.hpp>

#include <filesystem>
#include <string>

namespace ccmeta::test
{

struct SynthFixture
{
    LoadedDataset         ds;
    std::vector<TaskSpec> tasks;
};

/// Small generated dataset (3 cameras x 40 scenes, 24 px) with M=2 tasks of
/// at least `min_task` images. Built once per process.
inline const SynthFixture &small_synth( std::size_t min_task = 10 )
{
    static const SynthFixture f = [min_task] {
        SynthConfig c;
        c.cameras           = 3;
        c.scenes_per_camera = 40;
        c.image_size        = 24;
        c.seed              = 3;
        const auto dir      = std::filesystem::temp_directory_path() / "ccmeta_small_synth";
        std::filesystem::remove_all( dir );
        generate_dataset( c, dir.string() );
        SynthFixture out;
        out.ds = load_dataset( ( dir / "manifest.csv" ).string() );
        annotate_ccts( out.ds );
        const auto e = cct_entries( out.ds );
        out.tasks    = assign_tasks( e, build_histograms( e, 2 ), min_task ).tasks;
        return out;
    }();
    return f;
}

} // namespace ccmeta::test
