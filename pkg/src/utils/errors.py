class GridPerturbError(Exception):
    def __init__(self, err_msg, err_code, exit_code=3, context=None, reason=None):
        super().__init__(err_msg)
        self.err_msg = err_msg
        self.err_code = err_code
        self.exit_code = exit_code
        self.context = context
        self.reason = reason

    def to_dict(self):
        return {
            'err_msg': self.err_msg or 'Internal error occurred',
            'err_code': self.err_code or 'errors.internalError',
            'context': self.context,
            'reason': self.reason
        }


class UsageError(GridPerturbError):
    def __init__(self, err_msg, context=None):
        super().__init__(err_msg=err_msg, err_code="errors.usageError", exit_code=2, context=context)


class UndefinedResultError(GridPerturbError):
    def __init__(self, err_msg, context=None):
        super().__init__(err_msg=err_msg, err_code="errors.undefinedResult", exit_code=1, context=context)
