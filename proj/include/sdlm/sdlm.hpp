#pragma once
#ifndef SDLM_SDLM_HPP
#define SDLM_SDLM_HPP

#include "sdlm/error.hpp"
#include "sdlm/linalg.hpp"
#include "sdlm/random.hpp"
#include "sdlm/model.hpp"
#include "sdlm/kernel.hpp"
#include "sdlm/filter.hpp"
#include "sdlm/smoother.hpp"
#include "sdlm/parameters.hpp"
#include "sdlm/posterior.hpp"
#include "sdlm/mcmc.hpp"
#include "sdlm/fit.hpp"
#include "sdlm/predict.hpp"
#include "sdlm/simulate.hpp"
#include "sdlm/io.hpp"
#include "sdlm/commands.hpp"

#endif
