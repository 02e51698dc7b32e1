#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#
import pytest

from hmftools.response import ModelParams


@pytest.fixture(scope="session")
def stable_params():
    return ModelParams.drude(eta=0.2, gamma=2.0, beta=5.0)


@pytest.fixture(scope="session")
def critical_params():
    return ModelParams.drude(eta=0.5, gamma=2.0, beta=5.0)


@pytest.fixture(scope="session")
def unstable_params():
    return ModelParams.drude(eta=0.8, gamma=2.0, beta=5.0)


@pytest.fixture(scope="session")
def double_root_params():
    """f(s) = (s + 1/2)²(s + 3/4)."""
    return ModelParams.drude(eta=25.0 / 56.0, gamma=1.75, beta=5.0)


@pytest.fixture(scope="session", params=[0.5, 5.0, 20.0])
def uncoupled_params(request):
    return ModelParams.drude(eta=0.0, gamma=2.0, beta=request.param)


@pytest.fixture(scope="session")
def model_params(request):
    eta, gamma, beta = request.param
    return ModelParams.drude(eta=eta, gamma=gamma, beta=beta)
