#pragma once

// Umbrella header.

#include "choreokit/alignment.hpp"
#include "choreokit/audio.hpp"
#include "choreokit/audio_encoder.hpp"
#include "choreokit/beats.hpp"
#include "choreokit/crossmodal.hpp"
#include "choreokit/database.hpp"
#include "choreokit/error.hpp"
#include "choreokit/metrics.hpp"
#include "choreokit/mfcc.hpp"
#include "choreokit/model_io.hpp"
#include "choreokit/pipeline.hpp"
#include "choreokit/pose.hpp"
#include "choreokit/pose_encoder.hpp"
#include "choreokit/pose_io.hpp"
#include "choreokit/pose_processing.hpp"
#include "choreokit/render.hpp"
#include "choreokit/skeleton.hpp"
#include "choreokit/synth.hpp"
#include "choreokit/tsd.hpp"
