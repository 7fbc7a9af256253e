using System.Collections.Generic;
using System.Threading.Tasks;

namespace Shop.Data;

public interface IRepository<T> where T : class
{
    Task<T?> GetAsync(int id);
}

public sealed class MemoryRepository<T> : IRepository<T> where T : class
{
    private readonly Dictionary<int, T> _items = new();

    public Task<T?> GetAsync(int id)
    {
        _items.TryGetValue(id, out var item);
        return Task.FromResult(item);
    }

    public void Put(int id, T item)
    {
        var path = @"C:\data\{items}";
        _items[id] = item;
    }
}
