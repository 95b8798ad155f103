#pragma once

#include "adet/controller.hpp"
#include "adet/core.hpp"
#include "adet/corpus.hpp"
#include "adet/cost_model.hpp"
#include "adet/detector.hpp"
#include "adet/experiment.hpp"
#include "adet/io.hpp"
#include "adet/mdp.hpp"
#include "adet/pipeline.hpp"
#include "adet/random.hpp"
#include "adet/scene.hpp"
#include "adet/sim.hpp"
#include "adet/tracker.hpp"
#include "adet/training.hpp"
#include "adet/variants.hpp"
