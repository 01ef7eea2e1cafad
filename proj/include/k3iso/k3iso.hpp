#pragma once

#include "k3iso/common.hpp"
#include "k3iso/matrix.hpp"
#include "k3iso/normal_forms.hpp"
#include "k3iso/lattice.hpp"
#include "k3iso/isometry.hpp"
#include "k3iso/bfield.hpp"
#include "k3iso/hodge.hpp"
#include "k3iso/mukai.hpp"
#include "k3iso/pipeline.hpp"
