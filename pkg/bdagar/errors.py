'''Exceptions raised by the bdagar package.

Input problems subclass ValueError so callers can keep catching ValueError;
numerical and sampler failures subclass RuntimeError.
'''


class BdagarError(Exception):
    '''Base exception for the package.'''
    pass


class GraphError(BdagarError, ValueError):
    '''Raised when an adjacency graph is malformed or violates the model.'''
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class DataError(BdagarError, ValueError):
    '''Raised for invalid datasets, value tables, GeoJSON or config files.'''
    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f'{location}: {message}'
        super().__init__(message)


class FactorizationError(BdagarError, RuntimeError):
    '''Raised when a matrix that must be positive-definite fails Cholesky.'''
    pass


class SamplerError(BdagarError, RuntimeError):
    '''Raised when an MCMC update fails. Carries a JSON-ready state dump.
    Pickles with all its fields so it survives the trip back from a
    worker process.'''
    def __init__(self, message, iteration, chain=0, state=None):
        self.message = message
        self.iteration = iteration
        self.chain = chain
        self.state = state or {}
        super().__init__(f'chain {chain}, iteration {iteration}: {message}')

    def __reduce__(self):
        return type(self), (self.message, self.iteration, self.chain, self.state)
