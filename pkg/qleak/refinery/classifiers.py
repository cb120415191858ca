import warnings
from dataclasses import dataclass, field
from sklearn.ensemble import RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC

from ..utils import ConfigError
from ..utils.registry import CLASSIFIER_REGISTRY

DEFAULT_ENSEMBLE = ('logistic_regression', 'knn', 'mlp')


@CLASSIFIER_REGISTRY.register()
def logistic_regression(seed, C=1.0, max_iter=1000):
    """Multinomial logistic regression on standardized angles."""
    return make_pipeline(StandardScaler(), LogisticRegression(C=C, max_iter=max_iter, random_state=seed))


@CLASSIFIER_REGISTRY.register()
def knn(seed, k=5):
    """k nearest neighbours; probabilities are vote shares."""
    return make_pipeline(StandardScaler(), KNeighborsClassifier(n_neighbors=k))


@CLASSIFIER_REGISTRY.register()
def mlp(seed, hidden=32, lr=1e-3, epochs=500):
    """One hidden layer with a softmax output."""
    return make_pipeline(
        StandardScaler(),
        MLPClassifier(hidden_layer_sizes=(hidden, ), learning_rate_init=lr, max_iter=epochs, random_state=seed))


@CLASSIFIER_REGISTRY.register()
def random_forest(seed, n_estimators=100):
    return RandomForestClassifier(n_estimators=n_estimators, random_state=seed)


@CLASSIFIER_REGISTRY.register()
def svc(seed, C=1.0):
    return make_pipeline(StandardScaler(), SVC(C=C, probability=True, random_state=seed))


@dataclass(frozen=True)
class ClassifierSpec:
    """One member of the refinement ensemble.

    Args:
        kind (str): Name in CLASSIFIER_REGISTRY.
        params (dict): Hyperparameters passed to the builder.
    """
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CLASSIFIER_REGISTRY:
            raise ConfigError(f'Unknown classifier {self.kind}. '
                              f'Supported ones are: {sorted(CLASSIFIER_REGISTRY.keys())}')
        object.__setattr__(self, 'params', dict(self.params or {}))

    @classmethod
    def from_opt(cls, opt):
        """Accepts a bare kind name or a dict with `type` plus hyperparameters."""
        if isinstance(opt, str):
            return cls(opt)
        opt = dict(opt)
        kind = opt.pop('type', None)
        if kind is None:
            raise ConfigError(f'Classifier options need a type: {opt}')
        return cls(kind, opt)

    @property
    def name(self):
        return self.kind

    def build(self, train_size, seed):
        """A fresh unfitted estimator for a training partition of `train_size` rows."""
        params = dict(self.params)
        if self.kind == 'knn':
            params['k'] = max(1, min(int(params.get('k', 5)), train_size))
        return CLASSIFIER_REGISTRY.get(self.kind)(seed, **params)

    def to_dict(self):
        return {'type': self.kind, **self.params}


def default_specs():
    return [ClassifierSpec(kind) for kind in DEFAULT_ENSEMBLE]


def fit_quietly(estimator, x, y):
    # small partitions routinely stop before convergence
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', category=ConvergenceWarning)
        estimator.fit(x, y)
    return estimator
