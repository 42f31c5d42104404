"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad user input: configs, data files, parameter domains.

    The CLI maps this to exit code 2; any other exception maps to 3.
    """
